#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "berkson/errors.hpp"
#include "berkson/noise_models.hpp"
#include "oracles.hpp"

using namespace berkson;

namespace {

std::vector<error_density> supported() {
    return {error_density::laplace(1.0),        error_density::laplace(0.5),
            error_density::laplace(2.0),        error_density::laplace_sd(0.1),
            error_density::laplace_mixture(1.0, 0.2, 0.3),
            error_density::laplace_mixture(std::numbers::sqrt2 / 0.05, 0.2, 0.3),
            error_density::laplace_mixture(0.7, 0.45, -1.5)};
}

double sample_sd(const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("charfn closed forms") {
    CHECK(charfn(error_density::laplace(1.0), 0.0) == 1.0);
    CHECK(charfn(error_density::laplace(1.0), 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(charfn(error_density::laplace_mixture(1.0, 0.2, 0.3), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(charfn(error_density::none(), 17.0) == 1.0);
    const double t = 2.5;
    CHECK(charfn(error_density::laplace_mixture(2.0, 0.2, 0.3), t) ==
          doctest::Approx((0.8 + 0.2 * std::cos(0.3 * t)) / (1.0 + t * t / 4.0)).epsilon(1e-15));
}

TEST_CASE("density values") {
    CHECK(density_eval(error_density::laplace(2.0), 0.0) == doctest::Approx(1.0));
    CHECK(density_eval(error_density::laplace(1.0), std::log(2.0)) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK_THROWS_AS(density_eval(error_density::none(), 0.0), numerical_error);
}

TEST_CASE("decay constants") {
    const auto lap = error_density::laplace(3.0);
    CHECK(lap.beta() == 2.0);
    CHECK(lap.c_lower() == 1.0);
    CHECK(lap.c_upper() == doctest::Approx(9.0));
    CHECK(lap.smoothness() == smoothness_class::S);
    const auto mix = error_density::laplace_mixture(1.0, 0.2, 0.3);
    CHECK(mix.beta() == 2.0);
    CHECK(mix.c_lower() == doctest::Approx(0.6));
    CHECK(mix.smoothness() == smoothness_class::W);
    CHECK(error_density::none().smoothness() == smoothness_class::none);
}

TEST_CASE("invalid parameters are rejected with the field name") {
    CHECK_THROWS_AS(error_density::laplace(0.0), config_error);
    CHECK_THROWS_AS(error_density::laplace_mixture(1.0, 0.5, 0.3), config_error);
    CHECK_THROWS_AS(error_density::laplace_mixture(1.0, 0.2, 0.0), config_error);
    try {
        error_density::laplace_mixture(1.0, 0.7, 0.3);
    } catch (const config_error& e) {
        CHECK(e.field() == "lambda");
    }
}

TEST_CASE("sandwich bounds on a grid") {
    for (const auto& d : supported()) {
        CAPTURE(d.describe());
        for (int i = -500; i <= 500; ++i) {
            const double t = 0.1 * i;
            const double phi = std::abs(charfn(d, t));
            const double env = std::pow(oracle::bracket(t), -d.beta());
            CHECK(phi >= d.c_lower() * env * (1.0 - 1e-12));
            CHECK(phi <= d.c_upper() * env * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("parity is exact") {
    for (const auto& d : supported())
        for (double t : {0.1, 1.7, 13.0, 49.9}) CHECK(charfn(d, t) == charfn(d, -t));
}

TEST_CASE("Fourier transform of the density matches charfn") {
    for (const auto& d : {error_density::laplace(1.0), error_density::laplace(3.0),
                          error_density::laplace_mixture(1.0, 0.2, 0.3),
                          error_density::laplace_mixture(4.0, 0.3, 1.2)}) {
        CAPTURE(d.describe());
        std::vector<double> cuts{-60.0 / d.a() - 2.0};
        for (double k : density_kinks(d)) cuts.push_back(k);
        cuts.push_back(60.0 / d.a() + 2.0);
        for (double t = -20.0; t <= 20.0; t += 0.5) {
            const double ft = oracle::simpson_pieces(
                [&](double x) { return std::cos(t * x) * density_eval(d, x); }, cuts, 40000);
            CHECK(std::abs(ft - charfn(d, t)) < 1e-6);
        }
    }
}

TEST_CASE("samplers") {
    const auto zeros = sample_errors(error_density::none(), 5, 1);
    CHECK(zeros == std::vector<double>(5, 0.0));

    const auto lap = sample_errors(error_density::laplace(std::numbers::sqrt2 / 0.1), 100000, 42);
    CHECK(std::abs(sample_sd(lap) / 0.1 - 1.0) < 0.02);

    CHECK(sample_errors(error_density::laplace(1.0), 50, 9) == sample_errors(error_density::laplace(1.0), 50, 9));
    CHECK(sample_errors(error_density::laplace(1.0), 50, 9) != sample_errors(error_density::laplace(1.0), 50, 10));

    // Mixture variance: 2/a^2 + lambda mu^2.
    const auto mix = error_density::laplace_mixture(std::numbers::sqrt2 / 0.05, 0.2, 0.3);
    const auto draws = sample_errors(mix, 200000, 5);
    CHECK(sample_sd(draws) == doctest::Approx(std::sqrt(0.05 * 0.05 + 0.2 * 0.09)).epsilon(0.02));
}

TEST_CASE("derivative constant spot check") {
    // For Laplace(1): |Phi'(t)| <t>^3 = 2|t| / sqrt(1 + t^2), supremum 2 as t grows.
    CHECK(error_density::laplace(1.0).derivative_constant() == doctest::Approx(2.0).epsilon(1e-6));
    const double cw = error_density::laplace_mixture(1.0, 0.2, 0.3).derivative_constant();
    CHECK(std::isfinite(cw));
    CHECK(cw > 0.0);
}
