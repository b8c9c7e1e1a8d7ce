#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "berkson/deconv_kernel.hpp"
#include "berkson/errors.hpp"
#include "oracles.hpp"

using namespace berkson;

namespace {

// Independent reference for K(w;h): Simpson on [0, support] split at the taper breakpoints.
double kernel_oracle(const taper_spec& spec, const error_density& d, double w, double h) {
    std::vector<double> cuts{0.0};
    for (double b : spec.breakpoints()) cuts.push_back(b);
    cuts.push_back(spec.support());
    return oracle::simpson_pieces(
               [&](double t) { return phi_k(spec, t) * std::cos(t * w) / charfn(d, t / h); }, cuts, 20000) /
           std::numbers::pi;
}

// ||K||_2^2 from the table by the trapezoid rule over its nodes.
double table_l2(const kernel_table& k) {
    double acc = 0.0;
    for (double v : k.values()) acc += v * v;
    return acc * k.du();
}

kernel_table table_for(const taper_spec& spec, const error_density& d, double h, double a_n = 2.0 / 3.0) {
    const double span = default_span(a_n, h);
    return make_kernel_table(spec, d, h, default_grid_len(spec, span), span);
}

}  // namespace

TEST_CASE("smooth polynomial taper") {
    const taper_spec s;
    CHECK(phi_k(s, 0.0) == 1.0);
    CHECK(phi_k(s, 0.5) == 1.0);
    CHECK(phi_k(s, 1.5) == 0.0);
    CHECK(phi_k(s, 1.0) == 0.0);
    CHECK(phi_k(s, -0.3) == phi_k(s, 0.3));
    CHECK(phi_k(s, -0.8) == phi_k(s, 0.8));
    for (double t = -2.0; t <= 2.0; t += 0.01) {
        CHECK(phi_k(s, t) <= 1.0);
        CHECK(phi_k(s, t) >= 0.0);
    }
}

TEST_CASE("smooth polynomial taper is C2 at the junctions") {
    // One-sided derivatives approach each other: jumps shrink like delta^2 (first)
    // and delta (second), so no discontinuity survives in the limit.
    const taper_spec s;
    auto d1 = [&](double t) { const double e = 1e-6; return (phi_k(s, t + e) - phi_k(s, t - e)) / (2 * e); };
    auto d2 = [&](double t) {
        const double e = 1e-5;
        return (phi_k(s, t + e) - 2 * phi_k(s, t) + phi_k(s, t - e)) / (e * e);
    };
    for (double knot : {0.5, 1.0})
        for (double delta : {1e-3, 1e-4}) {
            CHECK(std::abs(d1(knot - delta) - d1(knot + delta)) < 1000 * delta * delta);
            CHECK(std::abs(d2(knot - delta) - d2(knot + delta)) < 1000 * delta);
        }
}

TEST_CASE("damped cutoff taper") {
    const auto s = damped_taper(0.22);
    CHECK(s.support() == doctest::Approx(1.0 / 0.22));
    CHECK(phi_k(s, 0.0) == 1.0);
    CHECK(phi_k(s, 1.0 / 0.22) == doctest::Approx(1.0 - std::exp(-1.0)));
    CHECK(phi_k(s, 1.0 / 0.22 + 1e-9) == 0.0);
    CHECK(phi_k(s, 2.0) == doctest::Approx(1.0 - std::exp(-1.0 / (0.44 * 0.44))));
    auto c = s;
    c.damp_times_poly = true;
    CHECK(phi_k(c, 1.0 / 0.22) == doctest::Approx(0.0));
    CHECK(phi_k(c, 1.0) == phi_k(s, 1.0));
}

TEST_CASE("kernel without measurement error") {
    // (1/pi) int_0^1 Phi_k = (D + (1 - D)/2) / pi for the smoothstep bridge.
    const taper_spec s;
    for (double h : {0.1, 0.5, 2.0})
        CHECK(kernel_eval(s, error_density::none(), 0.0, h) == doctest::Approx(0.75 / std::numbers::pi).epsilon(1e-10));
}

TEST_CASE("kernel_eval against an independent quadrature") {
    for (const auto& spec : {taper_spec{}, damped_taper()})
        for (const auto& d : {error_density::laplace(1.0), error_density::laplace_sd(0.1),
                              error_density::laplace_mixture(std::numbers::sqrt2 / 0.05, 0.2, 0.3)})
            for (double h : {0.1, 0.3})
                for (double w : {0.0, 0.7, -3.1}) {
                    const double ref = kernel_oracle(spec, d, w, h);
                    CHECK(std::abs(kernel_eval(spec, d, w, h) - ref) < 1e-8 * std::max(1.0, std::abs(ref)));
                }
    CHECK_THROWS_AS(kernel_eval(taper_spec{}, error_density::laplace(1.0), 0.0, 0.0), config_error);
}

TEST_CASE("kernel symmetry") {
    const auto d = error_density::laplace_mixture(1.0, 0.2, 0.3);
    for (double w : {0.3, 1.9, 12.0})
        CHECK(std::abs(kernel_eval(taper_spec{}, d, w, 0.2) - kernel_eval(taper_spec{}, d, -w, 0.2)) < 1e-10);
    const auto k = table_for(taper_spec{}, d, 0.2);
    for (std::size_t i = 0; i < k.size(); ++i) CHECK(std::abs(k.values()[i] - k.values()[k.size() - 1 - i]) < 1e-12);
    CHECK(k.imag_residual() < 1e-10);
}

TEST_CASE("FFT table agrees with quadrature") {
    std::mt19937_64 rng(7);
    for (const auto& spec : {taper_spec{}, damped_taper()})
        for (const auto& d : {error_density::laplace_sd(0.1), error_density::laplace(1.0),
                              error_density::laplace_mixture(std::numbers::sqrt2 / 0.05, 0.2, 0.3)})
            for (double h : {0.1, 0.25, 0.5}) {
                const auto k = table_for(spec, d, h);
                const double scale = std::max(1.0, std::abs(k(0.0)));
                for (double w : {0.0, 0.5, -0.5, 2.0, -2.0}) CHECK(std::abs(k(w) - kernel_eval(spec, d, w, h)) < 1e-6 * scale);
                std::uniform_real_distribution<double> u(-k.span(), k.span());
                for (int i = 0; i < 8; ++i) {
                    const double w = u(rng);
                    CHECK(std::abs(k(w) - kernel_eval(spec, d, w, h)) < 1e-6 * scale);
                }
            }
}

TEST_CASE("table resolution convergence") {
    const auto d = error_density::laplace_sd(0.1);
    for (const auto& spec : {taper_spec{}, damped_taper()}) {
        const double h = 0.25;
        const double span = default_span(2.0 / 3.0, h);
        const auto coarse = make_kernel_table(spec, d, h, 1u << 14, span);
        const auto fine = make_kernel_table(spec, d, h, 1u << 15, span);
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < coarse.size(); ++i) worst = std::max(worst, std::abs(coarse.values()[i] - fine(coarse.node(i))));
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("table validation") {
    const auto d = error_density::laplace(1.0);
    CHECK_THROWS_AS(make_kernel_table(taper_spec{}, d, 0.2, 100, 10.0), config_error);
    CHECK_THROWS_AS(make_kernel_table(taper_spec{}, d, 0.2, 1000, 10.0), config_error);
    CHECK_THROWS_AS(make_kernel_table(taper_spec{}, d, -0.2, 1024, 10.0), config_error);
    const auto k = make_kernel_table(taper_spec{}, d, 0.2, 1024, 10.0);
    CHECK(k.span() >= 10.0);
    CHECK_THROWS_AS(k(k.span() + 1.0), numerical_error);
}

TEST_CASE("Plancherel identity and sandwich") {
    // ||K||^2 = (1/2pi) int Phi_k^2 / Phi_f(t/h)^2; bounds
    //   2 D^{2b+1} / ((2b+1) 2pi C^2) h^{-2b} <= ||K||^2 <= (1+1/h^2)^b / (pi c^2).
    const taper_spec s;
    for (double a : {0.5, 1.0, 2.0})
        for (double h : {0.1, 0.2, 0.4}) {
            const auto d = error_density::laplace(a);
            // Wide span so the truncated tail is negligible for the C2 taper.
            const auto k = make_kernel_table(s, d, h, 1u << 17, 400.0);
            const double l2 = table_l2(k);
            const double freq = oracle::simpson(
                [&](double t) { return std::pow(phi_k(s, t) / charfn(d, t / h), 2); }, 0.0, 1.0, 20000) / std::numbers::pi;
            CHECK(l2 == doctest::Approx(freq).epsilon(1e-6));
            const double b = d.beta();
            const double lower = 2.0 * std::pow(s.flat_radius, 2 * b + 1) / ((2 * b + 1) * 2 * std::numbers::pi *
                                                                              std::pow(d.c_upper(), 2) * std::pow(h, 2 * b));
            const double upper = std::pow(1.0 + 1.0 / (h * h), b) / (std::numbers::pi * std::pow(d.c_lower(), 2));
            CHECK(l2 >= lower);
            CHECK(l2 <= upper);
        }
}

TEST_CASE("kernel tail bound is stable in h") {
    // int_{|z|>A} K((z-x)/h;h)^2 dz <= C 2A/(A^2-x^2) h^{2-2b}; C fitted at h = 0.4.
    const auto d = error_density::laplace(1.0);
    const double big_a = 2.0;
    std::vector<double> ratio;
    for (double h : {0.4, 0.2, 0.1}) {
        const auto k = table_for(taper_spec{}, d, h, 0.25);
        double worst = 0.0;
        for (double x = 0.0; x <= 1.0; x += 0.1) {
            double tail = 0.0;
            for (std::size_t i = 0; i < k.size(); ++i) {
                const double z = x + h * k.node(i);
                if (std::abs(z) > big_a) tail += k.values()[i] * k.values()[i];
            }
            tail *= h * k.du();
            worst = std::max(worst, tail / (2 * big_a / (big_a * big_a - x * x) * std::pow(h, 2 - 2 * d.beta())));
        }
        ratio.push_back(worst);
    }
    const double fitted = ratio[0];
    CHECK(fitted > 0.0);
    for (double r : ratio) CHECK(r <= fitted * (1.0 + 1e-9));
}

TEST_CASE("sup |w K(w;h)| scales like h^-beta") {
    const auto d = error_density::laplace(1.0);
    std::vector<double> scaled;
    for (double h : {0.4, 0.2, 0.1}) {
        const auto k = table_for(taper_spec{}, d, h);
        double sup = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) sup = std::max(sup, std::abs(k.node(i) * k.values()[i]));
        scaled.push_back(sup * std::pow(h, d.beta()));
    }
    const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
    CHECK(*hi / *lo < 2.0);
}

TEST_CASE("kernel cache memoizes") {
    kernel_cache cache;
    const auto d = error_density::laplace(1.0);
    const auto a = cache.get(taper_spec{}, d, 0.3, 1024, 20.0);
    const auto b = cache.get(taper_spec{}, d, 0.3, 1024, 20.0);
    const auto c = cache.get(taper_spec{}, d, 0.31, 1024, 20.0);
    CHECK(a.get() == b.get());
    CHECK(a.get() != c.get());
    CHECK(cache.size() == 2);
}
