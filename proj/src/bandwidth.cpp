#include "berkson/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "berkson/bands.hpp"
#include "berkson/errors.hpp"
#include "berkson/parallel.hpp"

namespace berkson {

namespace {

const std::map<std::string, double>& presets() {
    static const std::map<std::string, double> table{
        {"ga-100-0.1", 0.25},  {"ga-100-0.05", 0.24}, {"ga-750-0.1", 0.21}, {"ga-750-0.05", 0.12},
        {"gb-100-0.1", 0.20},  {"gb-100-0.05", 0.22}, {"gb-750-0.1", 0.22}, {"gb-750-0.05", 0.11},
        {"ext-100", 0.59},     {"ext-750", 0.32},
    };
    return table;
}

}  // namespace

void lepski_config::validate() const {
    if (!(k_lower < k_upper)) throw config_error("k_lower", "must be smaller than k_upper");
    if (!(c_l > 0.0)) throw config_error("c_l", "must be positive");
    if (!(a_n > 0.0 && a_n < 1.0)) throw config_error("a_n", "must lie in (0, 1)");
    if (!(a <= b)) throw config_error("interval", "requires a <= b");
}

lepski_config default_lepski_config(int n, double a_n, double beta, double a, double b, double m_bar,
                                    double c_l) {
    if (n < 3) throw config_error("n", "must be at least 3");
    lepski_config c;
    const double ln = std::log(static_cast<double>(n));
    c.k_upper = static_cast<int>(std::lround(std::log2(static_cast<double>(n))));
    c.k_lower = static_cast<int>(std::lround(-std::log2(std::pow(ln / (n * a_n), 1.0 / (beta + m_bar)))));
    // Keep the widest bandwidth inside the identifiable range.
    const double h_max = 1.0 / a_n - std::max(std::abs(a), std::abs(b));
    while (std::ldexp(1.0, -c.k_lower) > h_max) ++c.k_lower;
    c.k_lower = std::min(c.k_lower, c.k_upper - 1);
    c.c_l = c_l;
    c.beta = beta;
    c.a_n = a_n;
    c.m_bar = m_bar;
    c.a = a;
    c.b = b;
    return c;
}

lepski_result lepski_select(const regression_sample& sample, const lepski_config& config,
                            const kernel_factory& kernels) {
    config.validate();
    sample.validate();
    const int n = sample.design.n;
    const double a_n = sample.design.a_n;
    const int count = config.k_upper - config.k_lower + 1;
    lepski_result r;
    r.bandwidths.resize(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) r.bandwidths[static_cast<std::size_t>(i)] = std::ldexp(1.0, -(config.k_lower + i));

    const eval_grid grid = make_eval_grid(config.a, config.b, n, a_n, r.bandwidths.back());
    std::vector<std::vector<double>> curves(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), resolve_threads(config.threads), [&](std::size_t i) {
        const auto table = kernels(r.bandwidths[i]);
        curves[i] = estimate_g(sample, r.bandwidths[i], grid.x, *table).values;
    });

    const double ln = std::log(static_cast<double>(n));
    r.thresholds.resize(static_cast<std::size_t>(count));
    for (int l = 0; l < count; ++l) {
        const double h = r.bandwidths[static_cast<std::size_t>(l)];
        r.thresholds[static_cast<std::size_t>(l)] =
            config.c_l * std::sqrt(ln / (n * a_n * std::pow(h, 1.0 + 2.0 * config.beta)));
    }
    r.deviation.assign(static_cast<std::size_t>(count), std::vector<double>(static_cast<std::size_t>(count), 0.0));
    for (int k = 0; k < count; ++k)
        for (int l = k + 1; l < count; ++l) {
            double dev = 0.0;
            const auto& ck = curves[static_cast<std::size_t>(k)];
            const auto& cl = curves[static_cast<std::size_t>(l)];
            for (std::size_t i = 0; i < ck.size(); ++i) dev = std::max(dev, std::abs(ck[i] - cl[i]));
            r.deviation[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] = dev;
        }

    r.admissible_found = false;
    for (int k = 0; k < count && !r.admissible_found; ++k) {
        bool ok = true;
        for (int l = k; l < count && ok; ++l)
            ok = r.deviation[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] <=
                 r.thresholds[static_cast<std::size_t>(l)];
        if (ok) {
            r.admissible_found = true;
            r.k_hat = config.k_lower + k;
        }
    }
    if (!r.admissible_found) r.k_hat = config.k_upper;
    r.h = std::ldexp(1.0, -r.k_hat);
    return r;
}

double undersmooth(double h, double n) {
    if (!(n >= 3.0)) throw config_error("n", "must be at least 3");
    if (!(h > 0.0)) throw config_error("h", "bandwidth must be positive");
    return h / std::log(n);
}

double preset_bandwidth(const std::string& scenario) {
    const auto it = presets().find(scenario);
    if (it == presets().end()) throw config_error("bandwidth", "unknown preset '" + scenario + "'");
    return it->second;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [k, v] : presets()) names.push_back(k);
    return names;
}

}  // namespace berkson
