#include "berkson/noise_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "berkson/errors.hpp"

namespace berkson {

namespace {

double bracket(double t) { return std::sqrt(1.0 + t * t); }

double laplace_cf(double a, double t) {
    const double r = t / a;
    return 1.0 / (1.0 + r * r);
}

double laplace_cf_prime(double a, double t) {
    const double d = a * a + t * t;
    return -2.0 * a * a * t / (d * d);
}

double laplace_draw(double a, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    double u = unif(rng);
    while (u == -0.5) u = unif(rng);
    return -std::copysign(std::log1p(-2.0 * std::abs(u)), u) / a;
}

}  // namespace

error_density error_density::laplace(double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw config_error("a", "Laplace rate must be positive");
    error_density d;
    d.kind_ = error_kind::laplace;
    d.a_ = a;
    return d;
}

error_density error_density::laplace_sd(double sd) {
    if (!(sd > 0.0) || !std::isfinite(sd)) throw config_error("sigma_delta", "must be positive");
    return laplace(std::numbers::sqrt2 / sd);
}

error_density error_density::laplace_mixture(double a, double lambda, double mu) {
    if (!(a > 0.0) || !std::isfinite(a)) throw config_error("a", "Laplace rate must be positive");
    if (!(lambda > 0.0 && lambda < 0.5)) throw config_error("lambda", "must lie in (0, 1/2)");
    if (mu == 0.0 || !std::isfinite(mu)) throw config_error("mu", "must be a nonzero real");
    error_density d;
    d.kind_ = error_kind::laplace_mixture;
    d.a_ = a;
    d.lambda_ = lambda;
    d.mu_ = mu;
    return d;
}

error_density error_density::none() { return {}; }

double error_density::beta() const { return kind_ == error_kind::none ? 0.0 : 2.0; }

double error_density::c_lower() const {
    switch (kind_) {
        case error_kind::laplace: return std::min(a_ * a_, 1.0);
        case error_kind::laplace_mixture: return (1.0 - 2.0 * lambda_) * std::min(a_ * a_, 1.0);
        case error_kind::none: return 1.0;
    }
    return 1.0;
}

double error_density::c_upper() const {
    switch (kind_) {
        case error_kind::laplace:
        case error_kind::laplace_mixture: return std::max(a_ * a_, 1.0);
        case error_kind::none: return 1.0;
    }
    return 1.0;
}

smoothness_class error_density::smoothness() const {
    switch (kind_) {
        case error_kind::laplace: return smoothness_class::S;
        case error_kind::laplace_mixture: return smoothness_class::W;
        case error_kind::none: return smoothness_class::none;
    }
    return smoothness_class::none;
}

double error_density::derivative_constant() const {
    if (kind_ == error_kind::none) return 0.0;
    // Numerical sup over a logarithmic grid; only recorded, never used in estimation.
    const double power = kind_ == error_kind::laplace ? beta() + 1.0 : beta();
    double best = 0.0;
    for (int i = -400; i <= 400; ++i) {
        const double t = std::pow(10.0, i / 100.0);
        double d = laplace_cf_prime(a_, t);
        if (kind_ == error_kind::laplace_mixture) {
            d = (1.0 - lambda_ + lambda_ * std::cos(mu_ * t)) * d -
                lambda_ * mu_ * std::sin(mu_ * t) * laplace_cf(a_, t);
        }
        best = std::max(best, std::abs(d) * std::pow(bracket(t), power));
    }
    return best;
}

std::string error_density::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case error_kind::laplace: os << "laplace(a=" << a_ << ")"; break;
        case error_kind::laplace_mixture:
            os << "laplace_mixture(a=" << a_ << ", lambda=" << lambda_ << ", mu=" << mu_ << ")";
            break;
        case error_kind::none: os << "none"; break;
    }
    return os.str();
}

double charfn(const error_density& density, double t) {
    switch (density.kind()) {
        case error_kind::laplace: return laplace_cf(density.a(), t);
        case error_kind::laplace_mixture: {
            const double lam = density.lambda();
            return (1.0 - lam + lam * std::cos(density.mu() * t)) * laplace_cf(density.a(), t);
        }
        case error_kind::none: return 1.0;
    }
    return 1.0;
}

double density_eval(const error_density& density, double x) {
    const double a = density.a();
    auto lap = [a](double z) { return 0.5 * a * std::exp(-a * std::abs(z)); };
    switch (density.kind()) {
        case error_kind::laplace: return lap(x);
        case error_kind::laplace_mixture: {
            const double lam = density.lambda();
            const double mu = density.mu();
            return 0.5 * lam * lap(x + mu) + (1.0 - lam) * lap(x) + 0.5 * lam * lap(x - mu);
        }
        case error_kind::none:
            throw numerical_error("the degenerate error law has no density");
    }
    return 0.0;
}

std::vector<double> density_kinks(const error_density& density) {
    switch (density.kind()) {
        case error_kind::laplace: return {0.0};
        case error_kind::laplace_mixture: {
            const double m = std::abs(density.mu());
            return {-m, 0.0, m};
        }
        case error_kind::none: return {};
    }
    return {};
}

double density_tail_radius(const error_density& density) {
    if (density.kind() == error_kind::none) return 0.0;
    // exp(-a r) < 1e-17 beyond r = 39.2 / a
    return 40.0 / density.a() + std::abs(density.mu());
}

void sample_errors(const error_density& density, std::mt19937_64& rng, std::vector<double>& out) {
    switch (density.kind()) {
        case error_kind::none: std::fill(out.begin(), out.end(), 0.0); return;
        case error_kind::laplace:
            for (auto& v : out) v = laplace_draw(density.a(), rng);
            return;
        case error_kind::laplace_mixture: {
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            const double lam = density.lambda();
            for (auto& v : out) {
                const double u = unif(rng);
                double shift = 0.0;
                if (u < 0.5 * lam)
                    shift = -density.mu();
                else if (u < lam)
                    shift = density.mu();
                v = shift + laplace_draw(density.a(), rng);
            }
            return;
        }
    }
}

std::vector<double> sample_errors(const error_density& density, std::size_t count,
                                  std::uint64_t seed) {
    std::vector<double> out(count);
    std::mt19937_64 rng(seed);
    sample_errors(density, rng, out);
    return out;
}

}  // namespace berkson
