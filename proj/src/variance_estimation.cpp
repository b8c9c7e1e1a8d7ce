#include "berkson/variance_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "berkson/errors.hpp"

namespace berkson {

namespace {

std::vector<std::size_t> resolve(const regression_sample& sample, std::span<const std::size_t> indices) {
    if (!indices.empty()) return {indices.begin(), indices.end()};
    std::vector<std::size_t> all(sample.y.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
}

}  // namespace

sigma2_estimate estimate_sigma2(const regression_sample& sample, std::span<const std::size_t> indices) {
    sample.validate();
    const auto idx = resolve(sample, indices);
    if (idx.size() < 3) throw config_error("n", "need at least three observations for a difference estimate");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
        const double d = sample.y[idx[i + 1]] - sample.y[idx[i]];
        acc += d * d;
    }
    sigma2_estimate out;
    out.value = acc / (2.0 * static_cast<double>(idx.size() - 1));
    if (!(out.value > 0.0)) {
        out.value = std::numeric_limits<double>::epsilon();
        out.degenerate = true;
    }
    return out;
}

variance_curve::variance_curve(std::vector<double> positions, std::vector<double> residuals, double h_v,
                               double floor, double scale)
    : positions_(std::move(positions)), residuals_(std::move(residuals)), h_v_(h_v), floor_(floor) {
    for (auto& r : residuals_) r *= scale;
}

variance_curve variance_curve::constant(double value) {
    if (!(value > 0.0)) throw config_error("nu", "constant value must be positive");
    variance_curve c;
    c.floor_ = value;
    return c;
}

double variance_curve::smoothed(double x) const {
    if (positions_.empty()) return floor_ * floor_;
    const auto lo = std::lower_bound(positions_.begin(), positions_.end(), x - h_v_);
    const auto hi = std::upper_bound(positions_.begin(), positions_.end(), x + h_v_);
    double num = 0.0, den = 0.0;
    for (auto it = lo; it != hi; ++it) {
        const double u = (*it - x) / h_v_;
        const double k = 1.0 - u * u;
        if (k <= 0.0) continue;
        num += k * residuals_[static_cast<std::size_t>(it - positions_.begin())];
        den += k;
    }
    if (!(den > 0.0))
        throw numerical_error("variance smoothing window around " + std::to_string(x) +
                              " is empty; increase h_v");
    return num / den;
}

double variance_curve::operator()(double x) const {
    return std::sqrt(std::max(smoothed(x), floor_ * floor_));
}

double variance_curve::clamped(double x) const {
    if (positions_.empty()) return floor_;
    return (*this)(std::clamp(x, positions_.front(), positions_.back()));
}

std::vector<double> variance_curve::evaluate(std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return (*this)(x); });
    return out;
}

double default_variance_bandwidth(double a, double b, int n) {
    return (b - a) * std::pow(static_cast<double>(n), -0.2);
}

variance_curve estimate_nu(const regression_sample& sample, double h_v, double a, double b,
                           std::span<const std::size_t> indices) {
    sample.validate();
    if (!(h_v > 0.0)) throw config_error("h_v", "must be positive");
    if (!(a <= b)) throw config_error("interval", "requires a <= b");
    const auto& d = sample.design;
    if (a < d.points.front() || b > d.points.back())
        throw config_error("interval", "lies outside the design span");
    const auto idx = resolve(sample, indices);
    const auto s2 = estimate_sigma2(sample, idx);

    std::vector<double> pos, res;
    pos.reserve(idx.size());
    res.reserve(idx.size());
    double max_gap = 0.0;
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
        const double dy = sample.y[idx[i + 1]] - sample.y[idx[i]];
        pos.push_back(0.5 * (d.points[idx[i]] + d.points[idx[i + 1]]));
        res.push_back(0.5 * dy * dy);
        if (i > 0) max_gap = std::max(max_gap, pos.back() - pos[pos.size() - 2]);
    }
    if (!(h_v > 0.5 * max_gap))
        throw config_error("h_v", "smaller than half the residual spacing; local windows would be empty");
    const double floor = std::max(0.5 * std::sqrt(s2.value), 1e-8);
    variance_curve curve(std::move(pos), std::move(res), h_v, floor);
    curve.smoothed(a);
    curve.smoothed(b);
    return curve;
}

}  // namespace berkson
