#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace berkson {

enum class error_kind { laplace, laplace_mixture, none };
enum class smoothness_class { S, W, none };

// Known Berkson error law. Laplace rate a: density (a/2) exp(-a|x|),
// characteristic function 1/(1+(t/a)^2). The mixture places weight
// lambda/2 on each of the Laplace laws shifted by -mu and +mu.
class error_density {
public:
    static error_density laplace(double a);
    static error_density laplace_sd(double sd);
    static error_density laplace_mixture(double a, double lambda, double mu);
    static error_density none();

    error_kind kind() const { return kind_; }
    double a() const { return a_; }
    double lambda() const { return lambda_; }
    double mu() const { return mu_; }

    double beta() const;
    double c_lower() const;
    double c_upper() const;
    smoothness_class smoothness() const;
    // Bound on |Phi'(t)| <t>^{beta+1} (class S) or |Phi'(t)| <t>^{beta} (class W).
    double derivative_constant() const;

    std::string describe() const;

    friend bool operator==(const error_density&, const error_density&) = default;

private:
    error_kind kind_ = error_kind::none;
    double a_ = 1.0;
    double lambda_ = 0.0;
    double mu_ = 0.0;
};

double charfn(const error_density& density, double t);
double density_eval(const error_density& density, double x);

// Breakpoints where the density is not smooth (for quadrature splitting).
std::vector<double> density_kinks(const error_density& density);
// Half-width beyond which the density mass is below 1e-17.
double density_tail_radius(const error_density& density);

std::vector<double> sample_errors(const error_density& density, std::size_t count,
                                  std::uint64_t seed);
void sample_errors(const error_density& density, std::mt19937_64& rng,
                   std::vector<double>& out);

}  // namespace berkson
