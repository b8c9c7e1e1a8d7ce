#include <doctest.h>

#include <cmath>
#include <random>

#include "berkson/errors.hpp"
#include "berkson/simulation.hpp"
#include "berkson/variance_estimation.hpp"

using namespace berkson;

namespace {

regression_sample gaussian(int n, double sd, std::uint64_t seed) {
    regression_sample s{build_regular(n, 2.0 / 3.0), {}};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, sd);
    for (std::size_t j = 0; j < s.design.size(); ++j) s.y.push_back(z(rng));
    return s;
}

}  // namespace

TEST_CASE("difference variance estimate") {
    regression_sample line{build_regular(1000, 2.0 / 3.0), {}};
    for (double w : line.design.points) line.y.push_back(0.3 * w);
    const auto tr = estimate_sigma2(line);
    CHECK(tr.value < 1e-6);
    CHECK_FALSE(tr.degenerate);

    const auto s = gaussian(5000, 1.0, 17);
    CHECK(estimate_sigma2(s).value == doctest::Approx(1.0).epsilon(0.05));

    auto scaled = s;
    for (auto& y : scaled.y) y *= 3.0;
    CHECK(estimate_sigma2(scaled).value == doctest::Approx(9.0 * estimate_sigma2(s).value).epsilon(1e-12));

    regression_sample flat{build_regular(50, 0.5), std::vector<double>(101, 2.0)};
    const auto deg = estimate_sigma2(flat);
    CHECK(deg.degenerate);
    CHECK(deg.value > 0.0);
}

TEST_CASE("homoscedastic nu estimate") {
    const auto s = gaussian(2000, 0.1, 5);
    const auto nu = estimate_nu(s, default_variance_bandwidth(-0.7, 0.6, 2000), -0.7, 0.6);
    for (double x = -0.7; x <= 0.6; x += 0.01) CHECK(nu(x) == doctest::Approx(0.1).epsilon(0.15));
}

TEST_CASE("floor for constant responses") {
    regression_sample flat{build_regular(100, 2.0 / 3.0), std::vector<double>(201, 1.0)};
    const auto nu = estimate_nu(flat, 0.3, -0.7, 0.6);
    CHECK(nu.floor() == doctest::Approx(1e-8));
    for (double x : {-0.7, 0.0, 0.6}) {
        CHECK(nu(x) == nu.floor());
        CHECK(nu.floored_at(x));
    }
}

TEST_CASE("floor is a lower bound") {
    scenario sc;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto s = generate_sample(sc, seed);
        const auto nu = estimate_nu(s, 0.05, -0.7, 0.6);
        CHECK(nu.floor() > 0.0);
        for (double x = -0.7; x <= 0.6; x += 0.003) CHECK(nu(x) >= nu.floor());
    }
}

TEST_CASE("scale equivariance before flooring") {
    scenario sc;
    const auto s = generate_sample(sc, 9);
    auto scaled = s;
    for (auto& y : scaled.y) y *= -2.5;
    const auto a = estimate_nu(s, 0.2, -0.7, 0.6), b = estimate_nu(scaled, 0.2, -0.7, 0.6);
    for (double x = -0.7; x <= 0.6; x += 0.1) {
        CHECK(b.smoothed(x) == doctest::Approx(6.25 * a.smoothed(x)).epsilon(1e-12));
        CHECK(std::sqrt(b.smoothed(x)) == doctest::Approx(2.5 * std::sqrt(a.smoothed(x))).epsilon(1e-12));
    }
}

TEST_CASE("heteroscedastic convergence") {
    auto sup_error = [](int n) {
        scenario sc;
        sc.n = n;
        const auto g = signal_function(sc.signal);
        double total = 0.0;
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            const auto s = generate_sample(sc, seed);
            const auto nu = estimate_nu(s, default_variance_bandwidth(-0.7, 0.6, n), -0.7, 0.6);
            double worst = 0.0;
            for (double x = -0.7; x <= 0.6; x += 0.02)
                worst = std::max(worst, std::abs(nu(x) - std::sqrt(oracle_nu2(g, sc.density, sc.sigma * sc.sigma, x))));
            total += worst;
        }
        return total / 4.0;
    };
    const double coarse = sup_error(500), fine = sup_error(5000);
    MESSAGE("sup |nuhat - nu|: n=500 " << coarse << ", n=5000 " << fine);
    CHECK(fine < coarse);
}

TEST_CASE("index subsets and window checks") {
    const auto s = gaussian(200, 1.0, 4);
    std::vector<std::size_t> every_fourth;
    for (std::size_t i = 0; i < s.y.size(); i += 4) every_fourth.push_back(i);
    // The subset estimate only sees the selected responses.
    auto poisoned = s;
    for (std::size_t i = 0; i < s.y.size(); ++i)
        if (i % 4) poisoned.y[i] = 1e6;
    const auto a = estimate_nu(s, 0.3, -0.7, 0.6, every_fourth), b = estimate_nu(poisoned, 0.3, -0.7, 0.6, every_fourth);
    for (double x : {-0.5, 0.0, 0.5}) CHECK(a(x) == b(x));
    const double spacing = 4.0 / (200 * 2.0 / 3.0);
    CHECK_THROWS_AS(estimate_nu(s, 0.4 * spacing, -0.7, 0.6, every_fourth), config_error);
    CHECK_THROWS_AS(estimate_nu(s, 0.0, -0.7, 0.6), config_error);
    CHECK_THROWS_AS(estimate_nu(s, 0.3, -0.7, 1.6), config_error);
    const variance_curve sparse({0.0, 1.0}, {1.0, 1.0}, 0.1, 0.5);
    CHECK_THROWS_AS(sparse.smoothed(0.5), numerical_error);
    CHECK(sparse.clamped(3.0) == doctest::Approx(1.0));
    const auto c = variance_curve::constant(0.3);
    CHECK(c(7.0) == doctest::Approx(0.3));
    CHECK(c.is_constant());
}
