#include <doctest.h>

#include <cmath>
#include <numeric>

#include "berkson/design.hpp"
#include "berkson/errors.hpp"
#include "oracles.hpp"

using namespace berkson;

TEST_CASE("regular design") {
    const auto d = build_regular(1, 0.5);
    CHECK(d.points == std::vector<double>{-2.0, 0.0, 2.0});
    CHECK(d.weights == std::vector<double>{2.0, 2.0, 2.0});

    const auto d100 = build_regular(100, 2.0 / 3.0);
    CHECK(d100.points.back() == doctest::Approx(1.5).epsilon(1e-15));
    for (int j = 0; j <= 100; ++j) CHECK(d100.point(j) + d100.point(-j) == 0.0);
    for (std::size_t i = 1; i < d100.size(); ++i) CHECK(d100.points[i] > d100.points[i - 1]);

    const double total = std::accumulate(d100.weights.begin(), d100.weights.end(), 0.0);
    CHECK(std::abs(total - 2.0 / d100.a_n) <= 2.0 / (d100.n * d100.a_n));

    CHECK_THROWS_AS(build_regular(10, 1.0), config_error);
    CHECK_THROWS_AS(build_regular(10, 0.0), config_error);
    CHECK_THROWS_AS(build_regular(0, 0.5), config_error);
}

TEST_CASE("design from a uniform density") {
    const int n = 100;
    const double a_n = 2.0 / 3.0;
    // Uniform density of height a_n on [0, 1/a_n]: quantiles j/((n+1) a_n).
    const design_density uniform{[a_n](double) { return a_n; }, 1.0 / a_n};
    const auto d = build_from_density(uniform, n);
    for (int j = -n; j <= n; ++j) CHECK(std::abs(d.point(j) - j / ((n + 1) * a_n)) < 1e-9);
    CHECK(d.point(0) == 0.0);
    // Weights 1/(n f) coincide with the regular-design weights 1/(n a_n).
    for (double w : d.weights) CHECK(w == doctest::Approx(1.0 / (n * a_n)).epsilon(1e-12));
    // Points differ from the regular design only by the (n+1)/n normalization.
    const auto reg = build_regular(n, a_n);
    for (int j = -n; j <= n; ++j) CHECK(reg.point(j) == doctest::Approx(d.point(j) * (n + 1) / n).epsilon(1e-9));
}

TEST_CASE("design from a triangular density") {
    const int n = 40;
    const auto tri = [](double z) { return z <= 2.0 ? 1.0 - 0.5 * z : 0.0; };
    const auto d = build_from_density({tri, 2.0}, n);
    CHECK(build_from_density({tri, 2.0}, 1).point(0) == 0.0);
    for (int j = 1; j <= n; ++j) {
        const double mass = oracle::simpson(tri, 0.0, d.point(j), 2000);
        CHECK(std::abs(mass - static_cast<double>(j) / (n + 1)) < 1e-8);
        CHECK(d.weight(j) == doctest::Approx(1.0 / (n * tri(d.point(j)))));
        CHECK(d.point(-j) == -d.point(j));
    }
}

TEST_CASE("design density validation") {
    CHECK_THROWS_AS(build_from_density({[](double) { return -1.0; }, 1.0}, 5), config_error);
    CHECK_THROWS_AS(build_from_density({[](double) { return 0.1; }, 1.0}, 5), config_error);
}

TEST_CASE("sample split enumeration") {
    const auto d = build_regular(5, 0.5);
    const auto m = build_split(d, 5, 1.0);
    CHECK(m.removed == std::vector<int>{0, 5});
    int kept = 0;
    for (int j = -5; j <= 5; ++j) kept += m.is_kept(j, 5) ? 1 : 0;
    CHECK(kept + static_cast<int>(m.removed.size()) == 11);
    for (int j : m.removed) CHECK_FALSE(m.is_kept(j, 5));

    const double unit = 1.0 / (5 * 0.5);
    CHECK(m.gaps[static_cast<std::size_t>(1 + 5)] == doctest::Approx(2.0 * unit));
    CHECK(m.gaps[static_cast<std::size_t>(2 + 5)] == doctest::Approx(unit));
    // Gap of the leftmost point is one design step; the last point (j = 5) is removed,
    // so the gaps telescope to the full span.
    const double sum = std::accumulate(m.gaps.begin(), m.gaps.end(), 0.0);
    CHECK(std::abs(sum - 2.0 / 0.5) < 1e-12);

    CHECK(build_split(d, 10, 1.0).removed.size() == 1);
    CHECK_THROWS_AS(build_split(d, 1, 1.0), config_error);
    CHECK_THROWS_AS(build_split(d, 11, 1.0), config_error);
    CHECK_THROWS_AS(build_split(d, 2, 0.0), config_error);
}

TEST_CASE("split invariants on a larger design") {
    const auto d = build_regular(100, 2.0 / 3.0);
    const auto m = build_split(d, 7, 0.5);
    for (std::size_t k = 0; k < m.removed.size(); ++k) CHECK(m.removed[k] == -100 + static_cast<int>(k + 1) * 7);
    for (int j = -100; j <= 100; ++j) {
        const auto i = static_cast<std::size_t>(j + 100);
        if (!m.is_kept(j, 100)) {
            CHECK(m.gaps[i] == 0.0);
            continue;
        }
        const bool left_removed = j > -100 && !m.is_kept(j - 1, 100);
        CHECK(m.gaps[i] == doctest::Approx((left_removed ? 2.0 : 1.0) / (100 * d.a_n)));
    }
    for (int j : m.truncated) {
        CHECK(std::abs(j) <= 50);
        CHECK(m.is_kept(j, 100));
    }
}

TEST_CASE("default split parameters") {
    CHECK(default_split_period(100) == 25);
    CHECK(default_split_period(750) == 113);
    CHECK(default_split_period(10) == 2);
    CHECK(default_truncation(100, 2.0 / 3.0) == 1.0);
    CHECK(default_truncation(5, 0.1) == doctest::Approx(0.1 * std::log(5.0) * std::log(5.0)));
}
