#include "berkson/deconv_kernel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <unsupported/Eigen/FFT>

#include "berkson/errors.hpp"
#include "berkson/quadrature.hpp"

namespace berkson {

namespace {

double smoothstep_bridge(double r) {
    if (r <= 0.0) return 1.0;
    if (r >= 1.0) return 0.0;
    return 1.0 - r * r * r * (10.0 - 15.0 * r + 6.0 * r * r);
}

double bridge_on(double x, double flat) { return smoothstep_bridge((x - flat) / (1.0 - flat)); }

// Right-end Gregory coefficients for backward differences.
constexpr double gregory[] = {1.0 / 12.0,       1.0 / 24.0,         19.0 / 720.0,
                              3.0 / 160.0,      863.0 / 60480.0,    275.0 / 24192.0,
                              33953.0 / 3628800.0, 8183.0 / 1036800.0};
constexpr int gregory_order = 8;

double binomial(int k, int i) {
    double r = 1.0;
    for (int m = 1; m <= i; ++m) r = r * (k - i + m) / m;
    return r;
}

std::size_t next_pow2(std::size_t v) { return std::bit_ceil(std::max<std::size_t>(v, 1)); }

}  // namespace

double taper_spec::support() const {
    return kind == taper_kind::smooth_poly ? 1.0 : 1.0 / frequency_scale;
}

std::vector<double> taper_spec::breakpoints() const {
    if (kind == taper_kind::smooth_poly) return {flat_radius};
    if (damp_times_poly) return {flat_radius / frequency_scale};
    return {};
}

void taper_spec::validate() const {
    if (!(flat_radius > 0.0 && flat_radius < 1.0)) throw config_error("flat_radius", "must lie in (0, 1)");
    if (kind == taper_kind::damped_cutoff && !(frequency_scale > 0.0 && std::isfinite(frequency_scale)))
        throw config_error("frequency_scale", "must be positive");
}

taper_spec damped_taper(double frequency_scale) {
    taper_spec s;
    s.kind = taper_kind::damped_cutoff;
    s.frequency_scale = frequency_scale;
    return s;
}

double phi_k(const taper_spec& spec, double t) {
    const double a = std::abs(t);
    if (spec.kind == taper_kind::smooth_poly) return bridge_on(a, spec.flat_radius);
    const double r = spec.frequency_scale * a;
    if (r > 1.0) return 0.0;
    if (r == 0.0) return 1.0;
    const double damp = -std::expm1(-1.0 / (r * r));
    return spec.damp_times_poly ? damp * bridge_on(r, spec.flat_radius) : damp;
}

double kernel_eval(const taper_spec& spec, const error_density& density, double w, double h) {
    if (!(h > 0.0)) throw config_error("h", "bandwidth must be positive");
    spec.validate();
    const double s = spec.support();
    auto integrand = [&](double t) {
        return phi_k(spec, t) * std::cos(t * w) / charfn(density, t / h);
    };
    const double panel = std::abs(w) > 0.0 ? std::min(s, std::numbers::pi / std::abs(w)) : s;
    return integrate(integrand, 0.0, s, spec.breakpoints(), panel, 1e-11) / std::numbers::pi;
}

kernel_table::kernel_table(double h, double beta, double du, std::vector<double> values,
                           double imag_residual)
    : h_(h), beta_(beta), du_(du), half_(static_cast<std::ptrdiff_t>(values.size() / 2)),
      values_(std::move(values)), imag_residual_(imag_residual) {}

double kernel_table::operator()(double u) const {
    const double p = u / du_ + static_cast<double>(half_);
    const double last = static_cast<double>(values_.size() - 1);
    if (!(p >= 0.0 && p <= last))
        throw numerical_error("kernel argument " + std::to_string(u) + " outside the tabulated span");
    std::ptrdiff_t i = static_cast<std::ptrdiff_t>(std::floor(p));
    i = std::clamp<std::ptrdiff_t>(i, 1, static_cast<std::ptrdiff_t>(values_.size()) - 3);
    const double x = p - static_cast<double>(i);
    const double* v = values_.data() + i - 1;
    // Four-point Lagrange interpolation on nodes -1, 0, 1, 2.
    const double xm1 = x + 1.0, x1 = x - 1.0, x2 = x - 2.0;
    return -v[0] * x * x1 * x2 / 6.0 + v[1] * xm1 * x1 * x2 / 2.0 - v[2] * xm1 * x * x2 / 2.0 +
           v[3] * xm1 * x * x1 / 6.0;
}

std::size_t default_grid_len(const taper_spec& spec, double span) {
    const double needed = 100.0 * span * spec.support();
    return std::max<std::size_t>(1u << 14, next_pow2(static_cast<std::size_t>(std::ceil(needed))));
}

// Largest kernel argument (w_j - x)/h for x anywhere in the design span.
double default_span(double a_n, double h) { return 2.0 / (a_n * h); }

kernel_table make_kernel_table(const taper_spec& spec, const error_density& density, double h,
                               std::size_t grid_len, double span) {
    if (!(h > 0.0)) throw config_error("h", "bandwidth must be positive");
    if (grid_len < 256 || !std::has_single_bit(grid_len))
        throw config_error("grid_len", "must be a power of two >= 256");
    if (!(span > 0.0) || !std::isfinite(span)) throw config_error("span", "must be positive");
    spec.validate();

    const double s = spec.support();
    const double du_target = 2.0 * span / static_cast<double>(grid_len - 1);
    constexpr std::size_t max_fft = std::size_t{1} << 22;
    std::size_t nfft = std::min(max_fft, 16 * grid_len);
    // Samples per half range; the period of the sampled transform is 2pi/dt.
    auto samples_for = [&](std::size_t nf) {
        return static_cast<std::size_t>(std::floor(du_target * static_cast<double>(nf) * s / (2.0 * std::numbers::pi)));
    };
    std::size_t k_half = samples_for(nfft);
    while (k_half < 64 && nfft < max_fft) {
        nfft *= 2;
        k_half = samples_for(nfft);
    }
    k_half = std::max<std::size_t>(k_half, 2 * gregory_order);
    const double dt = s / static_cast<double>(k_half);
    const double du = 2.0 * std::numbers::pi / (static_cast<double>(nfft) * dt);
    const auto half = static_cast<std::size_t>(std::ceil(span / du));
    if (2 * half + 1 >= nfft || 2 * k_half + 1 >= nfft)
        throw numerical_error("kernel table resolution exceeds the transform length");

    // Trapezoid weights with Gregory corrections at both ends.
    std::vector<double> w(k_half + 1, 1.0);
    w[k_half] = 0.5;
    for (int k = 1; k <= gregory_order; ++k)
        for (int i = 0; i <= k; ++i)
            w[k_half - static_cast<std::size_t>(i)] -= gregory[k - 1] * ((i % 2) ? -1.0 : 1.0) * binomial(k, i);

    std::vector<std::complex<double>> in(nfft, 0.0), out;
    for (std::size_t k = 0; k <= k_half; ++k) {
        const double t = (k == k_half) ? s : static_cast<double>(k) * dt;
        const double v = dt * w[k] * phi_k(spec, t) / charfn(density, t / h);
        in[k] = v;
        if (k > 0) in[nfft - k] = v;
    }
    Eigen::FFT<double> fft;
    fft.fwd(out, in);

    std::vector<double> values(2 * half + 1);
    double max_re = 0.0, max_im = 0.0;
    for (std::size_t m = 0; m <= half; ++m) {
        const auto& pos = out[m];
        const auto& neg = out[(nfft - m) % nfft];
        values[half + m] = pos.real() / (2.0 * std::numbers::pi);
        values[half - m] = neg.real() / (2.0 * std::numbers::pi);
        max_re = std::max({max_re, std::abs(pos.real()), std::abs(neg.real())});
        max_im = std::max({max_im, std::abs(pos.imag()), std::abs(neg.imag())});
    }
    return kernel_table(h, density.beta(), du, std::move(values), max_re > 0.0 ? max_im / max_re : 0.0);
}

std::shared_ptr<const kernel_table> kernel_cache::get(const taper_spec& spec,
                                                      const error_density& density, double h,
                                                      std::size_t grid_len, double span) {
    const key k{static_cast<int>(spec.kind), spec.flat_radius, spec.frequency_scale, spec.damp_times_poly,
                static_cast<int>(density.kind()), density.a(), density.lambda(), density.mu(), h,
                grid_len, span};
    std::lock_guard lock(mutex_);
    auto it = tables_.find(k);
    if (it != tables_.end()) return it->second;
    auto table = std::make_shared<const kernel_table>(make_kernel_table(spec, density, h, grid_len, span));
    tables_.emplace(k, table);
    return table;
}

std::size_t kernel_cache::size() const {
    std::lock_guard lock(mutex_);
    return tables_.size();
}

}  // namespace berkson
