#pragma once

#include <optional>
#include <span>
#include <vector>

#include "berkson/estimator.hpp"

namespace berkson {

struct sigma2_estimate {
    double value = 0.0;
    bool degenerate = false;
};

// First-difference estimate (1/(2m)) sum (Y_{j+1} - Y_j)^2 over the m consecutive
// pairs of the selected indices (all indices when the selection is empty).
sigma2_estimate estimate_sigma2(const regression_sample& sample,
                                std::span<const std::size_t> indices = {});

// Nadaraya-Watson smooth of pseudo squared residuals with an Epanechnikov weight.
class variance_curve {
public:
    variance_curve() = default;
    variance_curve(std::vector<double> positions, std::vector<double> residuals, double h_v,
                   double floor, double scale = 1.0);

    // Constant curve nu(x) = value (floor = value).
    static variance_curve constant(double value);

    double operator()(double x) const;
    // Evaluation with x clamped to the range of residual positions.
    double clamped(double x) const;
    // Smoothed value before flooring and square root.
    double smoothed(double x) const;
    bool floored_at(double x) const { return smoothed(x) < floor_ * floor_; }

    double floor() const { return floor_; }
    double bandwidth() const { return h_v_; }
    bool is_constant() const { return positions_.empty(); }

    std::vector<double> evaluate(std::span<const double> xs) const;

private:
    std::vector<double> positions_;
    std::vector<double> residuals_;
    double h_v_ = 0.0;
    double floor_ = 0.0;
};

double default_variance_bandwidth(double a, double b, int n);

// Estimates nu on the design using only the given indices (all when empty).
// Rejects h_v that leaves an evaluation point in [a, b] without data.
variance_curve estimate_nu(const regression_sample& sample, double h_v, double a, double b,
                           std::span<const std::size_t> indices = {});

}  // namespace berkson
