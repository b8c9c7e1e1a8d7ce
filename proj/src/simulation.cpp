#include "berkson/simulation.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "berkson/bandwidth.hpp"
#include "berkson/design.hpp"
#include "berkson/errors.hpp"
#include "berkson/parallel.hpp"
#include "berkson/random.hpp"

namespace berkson {

namespace {

double bump(double x, double centre) {
    const double d = x - centre;
    if (2.0 * std::abs(d) > 1.0) return 0.0;
    const double v = 1.0 - 4.0 * d * d;
    return v * v * v * v * v;
}

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw config_error(where, "must be an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.contains(key)) throw config_error(where.empty() ? key : where + "." + key, "unknown key");
}

template <class T>
T get_field(const nlohmann::json& j, const std::string& key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw config_error(where.empty() ? key : where + "." + key, "missing or of the wrong type");
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(17);
    return out;
}

}  // namespace

double signal_eval(signal_kind signal, double x) {
    switch (signal) {
        case signal_kind::g_a: return bump(x, 0.1);
        case signal_kind::g_b: return bump(x, -0.4) + bump(x, 0.3);
    }
    return 0.0;
}

regression_fn signal_function(signal_kind signal) {
    return [signal](double x) { return signal_eval(signal, x); };
}

signal_kind parse_signal(const std::string& name) {
    if (name == "g_a" || name == "ga") return signal_kind::g_a;
    if (name == "g_b" || name == "gb") return signal_kind::g_b;
    throw config_error("signal", "unknown signal '" + name + "' (expected g_a or g_b)");
}

std::string signal_name(signal_kind signal) { return signal == signal_kind::g_a ? "g_a" : "g_b"; }

void scenario::validate() const {
    if (n < 3) throw config_error("n", "must be at least 3");
    if (!(sigma >= 0.0)) throw config_error("sigma", "must be nonnegative");
    if (!(a_n > 0.0 && a_n < 1.0)) throw config_error("a_n", "must lie in (0, 1)");
    if (!(h > 0.0)) throw config_error("h", "must be positive");
    if (!(a <= b)) throw config_error("interval", "requires a <= b");
    if (reps < 0) throw config_error("reps", "must be nonnegative");
    if (bootstrap < 1) throw config_error("bootstrap", "must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("alpha", "must lie in (0, 1)");
    taper.validate();
    const double edge = 1.0 / a_n - h;
    if (a < -edge || b > edge) throw config_error("interval", "outside the identifiable range");
    if (extension && density.smoothness() == smoothness_class::S)
        throw config_error("extension", "the sample-split band applies to class W densities");
}

scenario preset_scenario(const std::string& name) {
    scenario s;
    s.name = name;
    if (name == "ext-100" || name == "ext-750") {
        s.n = name == "ext-100" ? 100 : 750;
        s.sigma = 0.1;
        s.density = error_density::laplace_mixture(std::numbers::sqrt2 / 0.05, 0.2, 0.3);
        s.extension = true;
        s.h = preset_bandwidth(name);
        return s;
    }
    // "<signal>-<n>-<sigma>"
    const auto p1 = name.find('-');
    const auto p2 = name.find('-', p1 == std::string::npos ? p1 : p1 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos) throw config_error("scenario", "unknown preset '" + name + "'");
    s.h = preset_bandwidth(name);
    s.signal = parse_signal(name.substr(0, p1));
    s.n = std::stoi(name.substr(p1 + 1, p2 - p1 - 1));
    s.sigma = std::stod(name.substr(p2 + 1));
    s.density = error_density::laplace_sd(s.sigma);
    return s;
}

std::vector<std::string> preset_scenario_names() { return preset_names(); }

error_density density_from_json(const nlohmann::json& j) {
    check_keys(j, {"kind", "a", "sigma_delta", "lambda", "mu"}, "density");
    const auto kind = get_field<std::string>(j, "kind", "density");
    auto rate = [&]() {
        if (j.contains("a") && j.contains("sigma_delta"))
            throw config_error("density.a", "give either a or sigma_delta, not both");
        if (j.contains("a")) return get_field<double>(j, "a", "density");
        if (j.contains("sigma_delta")) {
            const double sd = get_field<double>(j, "sigma_delta", "density");
            if (!(sd > 0.0)) throw config_error("density.sigma_delta", "must be positive");
            return std::numbers::sqrt2 / sd;
        }
        throw config_error("density.a", "missing (or give sigma_delta)");
    };
    if (kind == "laplace") return error_density::laplace(rate());
    if (kind == "laplace_mixture" || kind == "mixture")
        return error_density::laplace_mixture(rate(), get_field<double>(j, "lambda", "density"),
                                              get_field<double>(j, "mu", "density"));
    if (kind == "none") return error_density::none();
    throw config_error("density.kind", "unknown kind '" + kind + "'");
}

nlohmann::json density_to_json(const error_density& d) {
    switch (d.kind()) {
        case error_kind::laplace: return {{"kind", "laplace"}, {"a", d.a()}};
        case error_kind::laplace_mixture:
            return {{"kind", "laplace_mixture"}, {"a", d.a()}, {"lambda", d.lambda()}, {"mu", d.mu()}};
        case error_kind::none: return {{"kind", "none"}};
    }
    return {};
}

taper_spec taper_from_json(const nlohmann::json& j) {
    check_keys(j, {"kind", "flat_radius", "frequency_scale", "damp_times_poly"}, "taper");
    taper_spec t;
    const auto kind = get_field<std::string>(j, "kind", "taper");
    if (kind == "smooth_poly")
        t.kind = taper_kind::smooth_poly;
    else if (kind == "damped_cutoff")
        t.kind = taper_kind::damped_cutoff;
    else
        throw config_error("taper.kind", "unknown kind '" + kind + "'");
    if (j.contains("flat_radius")) t.flat_radius = get_field<double>(j, "flat_radius", "taper");
    if (j.contains("frequency_scale")) t.frequency_scale = get_field<double>(j, "frequency_scale", "taper");
    if (j.contains("damp_times_poly")) t.damp_times_poly = get_field<bool>(j, "damp_times_poly", "taper");
    t.validate();
    return t;
}

nlohmann::json taper_to_json(const taper_spec& t) {
    return {{"kind", t.kind == taper_kind::smooth_poly ? "smooth_poly" : "damped_cutoff"},
            {"flat_radius", t.flat_radius},
            {"frequency_scale", t.frequency_scale},
            {"damp_times_poly", t.damp_times_poly}};
}

scenario scenario_from_json(const nlohmann::json& j) {
    check_keys(j, {"name", "preset", "signal", "n", "sigma", "sigma_delta", "a_n", "h", "interval", "reps",
                   "bootstrap", "alpha", "seed", "density", "taper", "extension", "d_n", "b_n", "h_v"},
               "");
    scenario s = j.contains("preset") ? preset_scenario(get_field<std::string>(j, "preset", "")) : scenario{};
    if (j.contains("name")) s.name = get_field<std::string>(j, "name", "");
    if (j.contains("signal")) s.signal = parse_signal(get_field<std::string>(j, "signal", ""));
    if (j.contains("n")) s.n = get_field<int>(j, "n", "");
    if (j.contains("sigma")) s.sigma = get_field<double>(j, "sigma", "");
    if (j.contains("sigma_delta")) {
        if (j.contains("density")) throw config_error("sigma_delta", "give either sigma_delta or density");
        const double sd = get_field<double>(j, "sigma_delta", "");
        s.density = sd > 0.0 ? error_density::laplace_sd(sd) : error_density::none();
    }
    if (j.contains("density")) s.density = density_from_json(j.at("density"));
    if (j.contains("a_n")) s.a_n = get_field<double>(j, "a_n", "");
    if (j.contains("h")) {
        const auto& hv = j.at("h");
        s.h = hv.is_string() ? preset_bandwidth(hv.get<std::string>()) : get_field<double>(j, "h", "");
    }
    if (j.contains("interval")) {
        const auto iv = get_field<std::vector<double>>(j, "interval", "");
        if (iv.size() != 2) throw config_error("interval", "must have two entries");
        s.a = iv[0];
        s.b = iv[1];
    }
    if (j.contains("reps")) s.reps = get_field<int>(j, "reps", "");
    if (j.contains("bootstrap")) s.bootstrap = get_field<int>(j, "bootstrap", "");
    if (j.contains("alpha")) s.alpha = get_field<double>(j, "alpha", "");
    if (j.contains("seed")) s.seed = get_field<std::uint64_t>(j, "seed", "");
    if (j.contains("taper")) s.taper = taper_from_json(j.at("taper"));
    if (j.contains("extension")) s.extension = get_field<bool>(j, "extension", "");
    if (j.contains("d_n")) s.d_n = get_field<int>(j, "d_n", "");
    if (j.contains("b_n")) s.b_n = get_field<double>(j, "b_n", "");
    if (j.contains("h_v")) s.h_v = get_field<double>(j, "h_v", "");
    s.validate();
    return s;
}

nlohmann::json scenario_to_json(const scenario& s) {
    return {{"name", s.name},         {"signal", signal_name(s.signal)},
            {"n", s.n},               {"sigma", s.sigma},
            {"a_n", s.a_n},           {"h", s.h},
            {"interval", {s.a, s.b}}, {"reps", s.reps},
            {"bootstrap", s.bootstrap}, {"alpha", s.alpha},
            {"seed", s.seed},         {"density", density_to_json(s.density)},
            {"taper", taper_to_json(s.taper)}, {"extension", s.extension},
            {"d_n", s.d_n},           {"b_n", s.b_n},
            {"h_v", s.h_v}};
}

regression_sample generate_sample(const scenario& s, std::uint64_t rep_seed) {
    regression_sample sample{build_regular(s.n, s.a_n), {}};
    const std::size_t m = sample.design.size();
    const auto delta = sample_errors(s.density, m, derive_seed(rep_seed, 0, 0));
    std::mt19937_64 rng(derive_seed(rep_seed, 1, 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    sample.y.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double eps = s.sigma > 0.0 ? s.sigma * normal(rng) : 0.0;
        sample.y[i] = signal_eval(s.signal, sample.design.points[i] + delta[i]) + eps;
    }
    return sample;
}

void scenario_report::summarize() {
    if (reps.empty()) {
        rejection_rate = 0.0;
        mean_width = 0.0;
        return;
    }
    int rejected = 0;
    double width = 0.0;
    for (const auto& r : reps) {
        rejected += r.covered ? 0 : 1;
        width += r.width;
    }
    rejection_rate = static_cast<double>(rejected) / static_cast<double>(reps.size());
    mean_width = width / static_cast<double>(reps.size());
}

scenario_report run_scenario(const scenario& s, const run_options& options) {
    s.validate();
    const auto start = std::chrono::steady_clock::now();
    const fixed_design design = build_regular(s.n, s.a_n);
    const unsigned threads = resolve_threads(options.threads);
    const unsigned outer = std::min<unsigned>(threads, static_cast<unsigned>(std::max(s.reps, 1)));

    band_request req;
    req.a = s.a;
    req.b = s.b;
    req.alpha = s.alpha;
    req.draws = s.bootstrap;
    req.h = s.h;
    req.h_v = s.h_v;
    req.threads = std::max(1u, threads / outer);

    std::optional<band_engine> engine;
    if (s.extension) {
        const int d_n = s.d_n > 0 ? s.d_n : default_split_period(s.n);
        const double b_n = s.b_n > 0.0 ? s.b_n : default_truncation(s.n, s.a_n);
        engine.emplace(design, req, s.density, s.taper, build_split(design, d_n, b_n));
    } else {
        engine.emplace(design, req, s.density, s.taper);
    }

    scenario_report report;
    report.scenario = s.name;
    report.reps_requested = s.reps;
    report.spacing = engine->grid().spacing;
    report.grid_points = engine->grid().x.size();
    report.truth.resize(report.grid_points);
    for (std::size_t i = 0; i < report.grid_points; ++i) report.truth[i] = signal_eval(s.signal, engine->grid().x[i]);

    std::vector<std::optional<rep_record>> slots(static_cast<std::size_t>(s.reps));
    std::mutex mutex;
    parallel_for(static_cast<std::size_t>(s.reps), outer, [&](std::size_t r) {
        if (options.cancel && options.cancel->load()) return;
        const auto sample = generate_sample(s, derive_seed(s.seed, 0, r));
        const auto band = engine->build(sample, nullptr, derive_seed(s.seed, 1, r));
        rep_record rec;
        rec.rep = static_cast<int>(r);
        rec.covered = band.covers(report.truth);
        rec.width = band.mean_width();
        rec.quantile = band.quantile;
        std::lock_guard lock(mutex);
        slots[r] = rec;
        if (r == 0) report.representative = band;
        if (options.on_rep) options.on_rep(rec);
    });
    for (const auto& slot : slots)
        if (slot) report.reps.push_back(*slot);
    report.interrupted = report.reps.size() < slots.size();
    report.summarize();
    report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

nlohmann::json report_summary_json(const scenario_report& report) {
    return {{"scenario", report.scenario},
            {"reps_requested", report.reps_requested},
            {"reps_completed", report.reps.size()},
            {"rejection_rate", report.rejection_rate},
            {"mean_width", report.mean_width},
            {"runtime_seconds", report.runtime_seconds},
            {"grid_spacing", report.spacing},
            {"grid_points", report.grid_points},
            {"interrupted", report.interrupted}};
}

void export_report(const scenario_report& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        auto out = open_out(dir / "reps.csv");
        out << "rep,covered,width,quantile\n";
        for (const auto& r : report.reps) out << r.rep << ',' << (r.covered ? 1 : 0) << ',' << r.width << ',' << r.quantile << '\n';
    }
    {
        auto out = open_out(dir / "summary.json");
        out << report_summary_json(report).dump(2) << '\n';
    }
    {
        auto out = open_out(dir / "band.csv");
        out << "x,g,ghat,lower,upper\n";
        const auto& b = report.representative;
        if (b.grid.size() == report.truth.size())
            for (std::size_t i = 0; i < b.grid.size(); ++i)
                out << b.grid[i] << ',' << report.truth[i] << ',' << b.ghat[i] << ',' << b.lower[i] << ',' << b.upper[i] << '\n';
    }
}

scenario_report read_report_summary(const std::filesystem::path& dir) {
    std::ifstream in(dir / "summary.json");
    if (!in) throw std::runtime_error("cannot read " + (dir / "summary.json").string());
    const auto j = nlohmann::json::parse(in);
    scenario_report r;
    r.scenario = j.at("scenario").get<std::string>();
    r.reps_requested = j.at("reps_requested").get<int>();
    r.rejection_rate = j.at("rejection_rate").get<double>();
    r.mean_width = j.at("mean_width").get<double>();
    r.runtime_seconds = j.at("runtime_seconds").get<double>();
    r.spacing = j.at("grid_spacing").get<double>();
    r.grid_points = j.at("grid_points").get<std::size_t>();
    r.interrupted = j.at("interrupted").get<bool>();

    std::ifstream reps(dir / "reps.csv");
    std::string line;
    std::getline(reps, line);
    while (std::getline(reps, line)) {
        if (line.empty()) continue;
        rep_record rec;
        char c1, c2, c3;
        int cov = 0;
        std::istringstream ls(line);
        ls >> rec.rep >> c1 >> cov >> c2 >> rec.width >> c3 >> rec.quantile;
        rec.covered = cov != 0;
        r.reps.push_back(rec);
    }
    return r;
}

}  // namespace berkson
