#include "berkson/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "berkson/errors.hpp"
#include "berkson/quadrature.hpp"

namespace berkson {

namespace {

constexpr double gregory[] = {1.0 / 12.0,          1.0 / 24.0,         19.0 / 720.0,
                              3.0 / 160.0,         863.0 / 60480.0,    275.0 / 24192.0,
                              33953.0 / 3628800.0, 8183.0 / 1036800.0};

// Quadrature weights on k = 0..m for int_0^{m dt}, Gregory-corrected at the right end only
// (the integrands below are even in t, so the left end needs no correction).
std::vector<double> half_line_weights(std::size_t m, double dt) {
    std::vector<double> w(m + 1, dt);
    w[0] = 0.5 * dt;
    w[m] = 0.5 * dt;
    for (int k = 1; k <= 8; ++k) {
        double binom = 1.0;
        for (int i = 0; i <= k; ++i) {
            if (i > 0) binom = binom * (k - i + 1) / i;
            w[m - static_cast<std::size_t>(i)] -= dt * gregory[k - 1] * ((i % 2) ? -1.0 : 1.0) * binom;
        }
    }
    return w;
}

void check_h(double h, const kernel_table& kernel) {
    if (!(h > 0.0)) throw config_error("h", "bandwidth must be positive");
    if (std::abs(kernel.h() - h) > 1e-12 * h)
        throw config_error("h", "kernel table was built for a different bandwidth");
}

}  // namespace

void regression_sample::validate() const {
    if (y.size() != design.size())
        throw config_error("responses", "length " + std::to_string(y.size()) + " does not match design size " +
                                            std::to_string(design.size()));
    for (double v : y)
        if (!std::isfinite(v)) throw config_error("responses", "contain non-finite values");
}

std::complex<double> phi_gamma_hat(const regression_sample& sample, double t) {
    std::complex<double> acc = 0.0;
    const auto& d = sample.design;
    for (std::size_t i = 0; i < d.size(); ++i)
        acc += d.weights[i] * sample.y[i] * std::polar(1.0, t * d.points[i]);
    return acc;
}

void check_evaluation_range(const fixed_design& design, std::span<const double> grid,
                            const kernel_table& kernel) {
    const double lo = design.points.front();
    const double hi = design.points.back();
    for (double x : grid) {
        if (!(x >= lo && x <= hi))
            throw config_error("eval_grid", "point " + std::to_string(x) + " lies outside the design span");
        const double reach = std::max(hi - x, x - lo) / kernel.h();
        if (reach > kernel.span())
            throw config_error("span", "kernel table span " + std::to_string(kernel.span()) +
                                           " does not cover argument " + std::to_string(reach));
    }
}

Eigen::MatrixXd smoother_matrix(const fixed_design& design, std::span<const double> grid,
                                const kernel_table& kernel, std::span<const std::size_t> columns,
                                std::span<const double> col_weights) {
    check_evaluation_range(design, grid, kernel);
    const double h = kernel.h();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const double w = design.points[columns[c]];
        const double scale = col_weights[c] / h;
        for (std::size_t i = 0; i < grid.size(); ++i)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = scale * kernel((w - grid[i]) / h);
    }
    return m;
}

Eigen::MatrixXd smoother_matrix(const fixed_design& design, std::span<const double> grid,
                                const kernel_table& kernel) {
    std::vector<std::size_t> cols(design.size());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    return smoother_matrix(design, grid, kernel, cols, design.weights);
}

estimate_curve estimate_g(const regression_sample& sample, double h, std::span<const double> grid,
                          const kernel_table& kernel) {
    check_h(h, kernel);
    sample.validate();
    const auto& d = sample.design;
    check_evaluation_range(d, grid, kernel);
    estimate_curve out;
    out.grid.assign(grid.begin(), grid.end());
    out.values.resize(grid.size());
    out.h = h;
    out.beta = kernel.beta();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d.size(); ++j)
            acc += d.weights[j] * sample.y[j] * kernel((d.points[j] - grid[i]) / h);
        out.values[i] = acc / h;
    }
    return out;
}

estimate_curve estimate_g_fourier(const regression_sample& sample, double h,
                                  std::span<const double> grid, const taper_spec& taper,
                                  const error_density& density) {
    if (!(h > 0.0)) throw config_error("h", "bandwidth must be positive");
    sample.validate();
    const auto& d = sample.design;
    const double tmax = taper.support() / h;
    double reach = 0.0;
    for (double x : grid) reach = std::max({reach, std::abs(d.points.front() - x), std::abs(d.points.back() - x)});
    // About 40 samples per radian of the fastest phase keeps the rule well resolved.
    const auto m = static_cast<std::size_t>(std::ceil(std::max(256.0, 40.0 * tmax * reach)));
    const double dt = tmax / static_cast<double>(m);
    const auto w = half_line_weights(m, dt);

    // Phi_gamma_hat at t_k via phase recurrences, then multiplied by the taper ratio.
    std::vector<std::complex<double>> spec(m + 1, 0.0);
    for (std::size_t j = 0; j < d.size(); ++j) {
        const std::complex<double> step = std::polar(1.0, dt * d.points[j]);
        std::complex<double> ph = 1.0;
        const double c = d.weights[j] * sample.y[j];
        for (std::size_t k = 0; k <= m; ++k) {
            spec[k] += c * ph;
            ph *= step;
            if ((k & 63) == 63) ph /= std::abs(ph);
        }
    }
    for (std::size_t k = 0; k <= m; ++k) {
        const double t = (k == m) ? tmax : static_cast<double>(k) * dt;
        spec[k] *= w[k] * phi_k(taper, h * t) / charfn(density, t);
    }

    estimate_curve out;
    out.grid.assign(grid.begin(), grid.end());
    out.values.resize(grid.size());
    out.h = h;
    out.beta = density.beta();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::complex<double> step = std::polar(1.0, -dt * grid[i]);
        std::complex<double> ph = 1.0;
        double acc = 0.0;
        for (std::size_t k = 0; k <= m; ++k) {
            acc += (spec[k] * ph).real();
            ph *= step;
            if ((k & 63) == 63) ph /= std::abs(ph);
        }
        // Integrand is Hermitian in t: the full line doubles the real part.
        out.values[i] = acc / std::numbers::pi;
    }
    return out;
}

double oracle_gamma(const regression_fn& g, const error_density& density, double w) {
    if (density.kind() == error_kind::none) return g(w);
    const double r = density_tail_radius(density);
    auto f = [&](double delta) { return g(w + delta) * density_eval(density, delta); };
    return integrate(f, -r, r, density_kinks(density), 0.05, 1e-10);
}

double oracle_nu2(const regression_fn& g, const error_density& density, double sigma2, double w) {
    if (density.kind() == error_kind::none) return sigma2;
    const double gam = oracle_gamma(g, density, w);
    const double r = density_tail_radius(density);
    auto f = [&](double delta) {
        const double e = g(w + delta) - gam;
        return e * e * density_eval(density, delta);
    };
    return integrate(f, -r, r, density_kinks(density), 0.05, 1e-10) + sigma2;
}

calibrated_model tabulate_calibrated(const regression_fn& g, const error_density& density,
                                     double sigma2, const fixed_design& design) {
    calibrated_model m;
    m.gamma.resize(design.size());
    m.nu2.resize(design.size());
    for (std::size_t i = 0; i < design.size(); ++i) {
        m.gamma[i] = oracle_gamma(g, density, design.points[i]);
        m.nu2[i] = oracle_nu2(g, density, sigma2, design.points[i]);
    }
    return m;
}

double oracle_mean(const calibrated_model& model, const fixed_design& design,
                   const kernel_table& kernel, double x) {
    const double h = kernel.h();
    double acc = 0.0;
    for (std::size_t i = 0; i < design.size(); ++i)
        acc += design.weights[i] * model.gamma[i] * kernel((design.points[i] - x) / h);
    return acc / h;
}

double oracle_variance(const calibrated_model& model, const fixed_design& design,
                       const kernel_table& kernel, double x) {
    const double h = kernel.h();
    double acc = 0.0;
    for (std::size_t i = 0; i < design.size(); ++i) {
        const double k = design.weights[i] * kernel((design.points[i] - x) / h);
        acc += model.nu2[i] * k * k;
    }
    return acc / (h * h);
}

double oracle_mean(const regression_fn& g, const error_density& density, const fixed_design& design,
                   const kernel_table& kernel, double x) {
    return oracle_mean(tabulate_calibrated(g, density, 0.0, design), design, kernel, x);
}

double oracle_variance(const regression_fn& g, const error_density& density, double sigma2,
                       const fixed_design& design, const kernel_table& kernel, double x) {
    return oracle_variance(tabulate_calibrated(g, density, sigma2, design), design, kernel, x);
}

}  // namespace berkson
