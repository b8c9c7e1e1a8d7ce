#include "berkson/design.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>

#include "berkson/errors.hpp"
#include "berkson/quadrature.hpp"

namespace berkson {

fixed_design build_regular(int n, double a_n) {
    if (n < 1) throw config_error("n", "must be at least 1");
    if (!(a_n > 0.0 && a_n < 1.0)) throw config_error("a_n", "must lie in (0, 1)");
    fixed_design d;
    d.n = n;
    d.a_n = a_n;
    d.regular = true;
    const double scale = 1.0 / (n * a_n);
    d.points.resize(2 * static_cast<std::size_t>(n) + 1);
    d.weights.assign(d.points.size(), scale);
    for (int j = -n; j <= n; ++j) d.points[static_cast<std::size_t>(j + n)] = j * scale;
    return d;
}

fixed_design build_from_density(const design_density& density, int n) {
    if (n < 1) throw config_error("n", "must be at least 1");
    if (!density.f) throw config_error("density", "missing density function");
    const double end = density.support_end;
    if (!(end > 0.0) || !std::isfinite(end)) throw config_error("support_end", "must be positive");

    // Cumulative mass on a fine mesh, refined by quadrature within a cell.
    const int cells = std::max(512, 8 * n);
    const double step = end / cells;
    std::vector<double> cum(static_cast<std::size_t>(cells) + 1, 0.0);
    for (int i = 0; i < cells; ++i) {
        const double lo = i * step;
        const double fl = density.f(lo);
        if (!(fl >= 0.0) || !std::isfinite(fl))
            throw config_error("density", "must be finite and nonnegative on its support");
        cum[static_cast<std::size_t>(i) + 1] = cum[static_cast<std::size_t>(i)] +
                                               integrate(density.f, lo, lo + step, {}, 0.0, 1e-11);
    }
    if (!(density.f(end) >= 0.0)) throw config_error("density", "must be nonnegative on its support");
    const double mass = cum.back();
    if (!std::isfinite(mass)) throw config_error("density", "is not integrable");
    if (mass < static_cast<double>(n) / (n + 1) - 1e-12)
        throw config_error("density", "carries too little mass on its support for n points");

    fixed_design d;
    d.n = n;
    d.regular = false;
    d.points.assign(2 * static_cast<std::size_t>(n) + 1, 0.0);
    d.weights.assign(d.points.size(), 0.0);
    for (int j = 1; j <= n; ++j) {
        const double target = static_cast<double>(j) / (n + 1);
        // Cell holding the quantile, then a bracketed root solve inside it.
        const auto it = std::upper_bound(cum.begin(), cum.end(), target);
        const int i = std::clamp(static_cast<int>(it - cum.begin()) - 1, 0, cells - 1);
        const double lo = i * step;
        auto excess = [&](double w) {
            return cum[static_cast<std::size_t>(i)] - target + (w > lo ? integrate(density.f, lo, w, {}, 0.0, 1e-11) : 0.0);
        };
        double w = lo;
        const double f_lo = excess(lo), f_hi = excess(lo + step);
        if (f_lo >= 0.0) {
            w = lo;
        } else if (f_hi <= 0.0) {
            w = lo + step;
        } else {
            std::uintmax_t iters = 100;
            const auto r = boost::math::tools::toms748_solve(excess, lo, lo + step, f_lo, f_hi,
                                                             boost::math::tools::eps_tolerance<double>(50), iters);
            w = 0.5 * (r.first + r.second);
        }
        d.points[static_cast<std::size_t>(n + j)] = w;
        d.points[static_cast<std::size_t>(n - j)] = -w;
    }
    for (int j = -n; j <= n; ++j) {
        const double fv = density.f(std::abs(d.point(j)));
        if (!(fv > 0.0) || !std::isfinite(fv))
            throw config_error("density", "must be positive at every design point");
        d.weights[static_cast<std::size_t>(j + n)] = 1.0 / (n * fv);
    }
    d.a_n = 1.0 / d.points.back();
    return d;
}

split_mask build_split(const fixed_design& design, int d_n, double b_n) {
    const int n = design.n;
    if (d_n < 2 || d_n > 2 * n) throw config_error("d_n", "must lie in [2, 2n]");
    if (!(b_n > 0.0 && b_n <= 1.0)) throw config_error("b_n", "must lie in (0, 1]");
    split_mask m;
    m.d_n = d_n;
    m.b_n = b_n;
    m.kept.assign(design.size(), 1);
    for (int k = 1; k * d_n <= 2 * n; ++k) {
        const int j = -n + k * d_n;
        m.removed.push_back(j);
        m.kept[static_cast<std::size_t>(j + n)] = 0;
    }
    m.gaps.assign(design.size(), 0.0);
    const double unit = 1.0 / (n * design.a_n);
    for (int j = -n; j <= n; ++j) {
        if (!m.is_kept(j, n)) continue;
        const bool left_removed = j > -n && !m.is_kept(j - 1, n);
        m.gaps[static_cast<std::size_t>(j + n)] = left_removed ? 2.0 * unit : unit;
        if (std::abs(j) <= n * b_n) m.truncated.push_back(j);
    }
    return m;
}

int default_split_period(int n) {
    const double ln = std::log(static_cast<double>(n));
    const int d = std::max(8, static_cast<int>(std::ceil(std::pow(ln, 2.5))));
    return std::max(2, std::min(d, n / 4));
}

double default_truncation(int n, double a_n) {
    const double ln = std::log(static_cast<double>(n));
    return std::min(1.0, a_n * ln * ln);
}

}  // namespace berkson
