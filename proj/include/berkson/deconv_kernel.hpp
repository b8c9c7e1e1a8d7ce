#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "berkson/noise_models.hpp"

namespace berkson {

enum class taper_kind { smooth_poly, damped_cutoff };

// Fourier transform Phi_k of the band-limited kernel, as a function of the
// kernel frequency t (the integration variable of K(.;h)).
//
// smooth_poly: 1 on [-D, D], quintic smoothstep to 0 at |t| = 1.
// damped_cutoff: 1 - exp(-1/(kappa t)^2) for kappa |t| <= 1, 0 beyond, where
//   kappa = frequency_scale converts t to the spectral variable omega h of the
//   damped spectral cutoff. With damp_times_poly the hard cut is replaced by
//   the smoothstep bridge in kappa |t|.
struct taper_spec {
    taper_kind kind = taper_kind::smooth_poly;
    double flat_radius = 0.5;
    double frequency_scale = 0.22;
    bool damp_times_poly = false;

    double support() const;
    // Points in (0, support) where the taper is not smooth.
    std::vector<double> breakpoints() const;
    void validate() const;

    friend bool operator==(const taper_spec&, const taper_spec&) = default;
};

taper_spec damped_taper(double frequency_scale = 0.22);

double phi_k(const taper_spec& spec, double t);

// Reference evaluation of K(w;h) = (1/2pi) int e^{-itw} Phi_k(t) / Phi_f(-t/h) dt.
double kernel_eval(const taper_spec& spec, const error_density& density, double w, double h);

// K(.;h) tabulated at u_m = m du, |m| <= half_count, with cubic interpolation.
class kernel_table {
public:
    kernel_table() = default;
    kernel_table(double h, double beta, double du, std::vector<double> values, double imag_residual);

    double h() const { return h_; }
    double beta() const { return beta_; }
    double du() const { return du_; }
    double span() const { return du_ * static_cast<double>(half_); }
    std::size_t size() const { return values_.size(); }
    double node(std::size_t i) const { return (static_cast<double>(i) - static_cast<double>(half_)) * du_; }
    const std::vector<double>& values() const { return values_; }
    double imag_residual() const { return imag_residual_; }

    // Interpolated K(u;h); throws numerical_error when |u| exceeds the span.
    double operator()(double u) const;

private:
    double h_ = 0.0;
    double beta_ = 0.0;
    double du_ = 0.0;
    std::ptrdiff_t half_ = 0;
    std::vector<double> values_;
    double imag_residual_ = 0.0;
};

// Default table resolution: at least 2^14 points and du * support <= 0.02.
std::size_t default_grid_len(const taper_spec& spec, double span);
double default_span(double a_n, double h);

kernel_table make_kernel_table(const taper_spec& spec, const error_density& density, double h,
                               std::size_t grid_len, double span);

// Memoizes tables by (taper, density, h, grid_len, span).
class kernel_cache {
public:
    std::shared_ptr<const kernel_table> get(const taper_spec& spec, const error_density& density,
                                            double h, std::size_t grid_len, double span);
    std::size_t size() const;

private:
    using key = std::tuple<int, double, double, bool, int, double, double, double, double,
                           std::size_t, double>;
    mutable std::mutex mutex_;
    std::map<key, std::shared_ptr<const kernel_table>> tables_;
};

}  // namespace berkson
