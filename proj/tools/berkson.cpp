// Command-line front end: estimate, band, simulate, kernel-dump, selftest.
//
// Exit codes: 0 success, 2 configuration error, 1 runtime error.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "berkson/bands.hpp"
#include "berkson/bandwidth.hpp"
#include "berkson/deconv_kernel.hpp"
#include "berkson/design.hpp"
#include "berkson/errors.hpp"
#include "berkson/estimator.hpp"
#include "berkson/noise_models.hpp"
#include "berkson/parallel.hpp"
#include "berkson/quadrature.hpp"
#include "berkson/simulation.hpp"
#include "berkson/variance_estimation.hpp"

using namespace berkson;
using nlohmann::json;

namespace {

std::atomic<bool> interrupted{false};

extern "C" void on_sigint(int) { interrupted.store(true); }

struct density_options {
    std::string kind;
    std::optional<double> a;
    std::optional<double> sigma_delta;
    std::optional<double> lambda;
    std::optional<double> mu;
};

struct taper_options {
    std::string kind = "damped";
    double frequency_scale = 0.22;
    double flat_radius = 0.5;
    bool damp_times_poly = false;
};

struct data_options {
    std::string input;
    std::string output;
    std::optional<double> a_n;
    std::vector<double> interval{-0.7, 0.6};
    std::string bandwidth;
    std::optional<double> h;
    double c_l = 1.0;
    double m_bar = 4.0;
    bool undersmooth = false;
};

struct band_options {
    double alpha = 0.05;
    int draws = 250;
    std::uint64_t seed = 1;
    double h_v = 0.0;
    double grid_refine = 1.0;
    bool extension = false;
    int d_n = 0;
    double b_n = 0.0;
};

void add_density_options(CLI::App* cmd, density_options& d) {
    cmd->add_option("--density", d.kind, "Measurement error density: laplace, mixture or none")
        ->required()
        ->check(CLI::IsMember({"laplace", "mixture", "none"}));
    cmd->add_option("--a", d.a, "Laplace rate a");
    cmd->add_option("--sigma-delta", d.sigma_delta, "Laplace standard deviation (a = sqrt(2)/sd)");
    cmd->add_option("--lambda", d.lambda, "Mixture weight of the shifted components");
    cmd->add_option("--mu", d.mu, "Mixture shift");
}

void add_taper_options(CLI::App* cmd, taper_options& t) {
    cmd->add_option("--taper", t.kind, "Kernel taper: damped or smooth")->check(CLI::IsMember({"damped", "smooth"}));
    cmd->add_option("--frequency-scale", t.frequency_scale, "Damped cutoff scale kappa");
    cmd->add_option("--flat-radius", t.flat_radius, "Flat part of the smooth taper");
    cmd->add_flag("--damp-times-poly", t.damp_times_poly, "Multiply the damped cutoff by the smooth bridge");
}

void add_data_options(CLI::App* cmd, data_options& o) {
    cmd->add_option("--input", o.input, "CSV with header w,Y on the regular design")->required();
    cmd->add_option("--output", o.output, "Output CSV");
    cmd->add_option("--a-n", o.a_n, "Design parameter a_n (inferred from the largest w when omitted)");
    cmd->add_option("--interval", o.interval, "Evaluation interval a b")->expected(2);
    cmd->add_option("--bandwidth", o.bandwidth, "fixed:<h> | preset:<scenario> | lepski");
    cmd->add_option("--h", o.h, "Fixed bandwidth (same as --bandwidth fixed:<h>)");
    cmd->add_option("--c-l", o.c_l, "Lepski threshold constant");
    cmd->add_option("--m-bar", o.m_bar, "Largest smoothness the Lepski grid adapts to");
    cmd->add_flag("--undersmooth", o.undersmooth, "Divide the selected bandwidth by ln n");
}

error_density make_density(const density_options& d) {
    if (d.kind == "none") return error_density::none();
    double rate = 0.0;
    if (d.a && d.sigma_delta) throw config_error("density", "give either --a or --sigma-delta, not both");
    if (d.a)
        rate = *d.a;
    else if (d.sigma_delta) {
        if (!(*d.sigma_delta > 0.0)) throw config_error("sigma-delta", "must be positive");
        rate = std::numbers::sqrt2 / *d.sigma_delta;
    } else {
        throw config_error("a", "the " + d.kind + " density needs --a or --sigma-delta");
    }
    if (d.kind == "laplace") return error_density::laplace(rate);
    if (!d.lambda) throw config_error("lambda", "the mixture density needs --lambda");
    if (!d.mu) throw config_error("mu", "the mixture density needs --mu");
    return error_density::laplace_mixture(rate, *d.lambda, *d.mu);
}

taper_spec make_taper(const taper_options& t) {
    taper_spec s;
    s.kind = t.kind == "smooth" ? taper_kind::smooth_poly : taper_kind::damped_cutoff;
    s.frequency_scale = t.frequency_scale;
    s.flat_radius = t.flat_radius;
    s.damp_times_poly = t.damp_times_poly;
    s.validate();
    return s;
}

regression_sample read_sample(const std::string& path, std::optional<double> a_n) {
    std::ifstream in(path);
    if (!in) throw config_error("input", "cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw config_error("input", "empty file");
    std::vector<double> w, y;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double a = 0.0, b = 0.0;
        if (!(ls >> a >> b)) throw config_error("input", "row " + std::to_string(row) + " is not a pair of numbers");
        w.push_back(a);
        y.push_back(b);
    }
    if (w.size() < 3 || w.size() % 2 == 0)
        throw config_error("input", "need 2n+1 >= 3 rows on the symmetric design, found " + std::to_string(w.size()));
    const int n = static_cast<int>(w.size() / 2);
    const double an = a_n ? *a_n : 1.0 / w.back();
    const auto design = build_regular(n, an);
    for (std::size_t i = 0; i < w.size(); ++i)
        if (std::abs(w[i] - design.points[i]) > 1e-9 * std::max(1.0, std::abs(design.points[i])))
            throw config_error("input", "w in row " + std::to_string(i + 2) + " does not match the design point " +
                                            std::to_string(design.points[i]) + " (a_n = " + std::to_string(an) + ")");
    regression_sample s{design, std::move(y)};
    s.validate();
    return s;
}

std::shared_ptr<const kernel_table> table_for(const taper_spec& taper, const error_density& density, double h,
                                              double a_n) {
    const double span = default_span(a_n, h);
    return std::make_shared<const kernel_table>(make_kernel_table(taper, density, h, default_grid_len(taper, span), span));
}

struct chosen_bandwidth {
    double h = 0.0;
    std::string rule;
    std::optional<lepski_result> lepski;
};

chosen_bandwidth choose_bandwidth(const data_options& o, const regression_sample& sample, const error_density& density,
                                  const taper_spec& taper, unsigned threads) {
    if (o.h && !o.bandwidth.empty()) throw config_error("bandwidth", "give either --h or --bandwidth");
    chosen_bandwidth c;
    if (o.h) {
        c.h = *o.h;
        c.rule = "fixed";
    } else if (o.bandwidth.rfind("fixed:", 0) == 0) {
        try {
            c.h = std::stod(o.bandwidth.substr(6));
        } catch (const std::exception&) {
            throw config_error("bandwidth", "cannot parse '" + o.bandwidth + "'");
        }
        c.rule = "fixed";
    } else if (o.bandwidth.rfind("preset:", 0) == 0) {
        c.h = preset_bandwidth(o.bandwidth.substr(7));
        c.rule = o.bandwidth;
    } else if (o.bandwidth == "lepski") {
        const auto& d = sample.design;
        auto cfg = default_lepski_config(d.n, d.a_n, density.beta(), o.interval[0], o.interval[1], o.m_bar, o.c_l);
        cfg.threads = threads;
        kernel_cache cache;
        const kernel_factory factory = [&](double h) {
            const double span = default_span(d.a_n, h);
            return cache.get(taper, density, h, default_grid_len(taper, span), span);
        };
        c.lepski = lepski_select(sample, cfg, factory);
        c.h = c.lepski->h;
        c.rule = "lepski";
    } else if (o.bandwidth.empty()) {
        throw config_error("bandwidth", "missing; give --h or --bandwidth");
    } else {
        throw config_error("bandwidth", "expected fixed:<h>, preset:<scenario> or lepski, got '" + o.bandwidth + "'");
    }
    if (o.undersmooth) {
        c.h = undersmooth(c.h, sample.design.n);
        c.rule += "+undersmooth";
    }
    if (!(c.h > 0.0)) throw config_error("h", "bandwidth must be positive");
    return c;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot write '" + path + "'");
    file << std::setprecision(17);
    return file;
}

int run_estimate(const data_options& o, const density_options& dopt, const taper_options& topt, unsigned threads,
                 bool as_json) {
    const auto density = make_density(dopt);
    const auto taper = make_taper(topt);
    const auto sample = read_sample(o.input, o.a_n);
    const auto bw = choose_bandwidth(o, sample, density, taper, threads);
    const auto& d = sample.design;
    const auto grid = make_eval_grid(o.interval[0], o.interval[1], d.n, d.a_n, bw.h);
    const auto est = estimate_g(sample, bw.h, grid.x, *table_for(taper, density, bw.h, d.a_n));

    std::ofstream file;
    auto& out = open_output(o.output, file);
    out << std::setprecision(17) << "x,ghat\n";
    for (std::size_t i = 0; i < grid.x.size(); ++i) out << grid.x[i] << ',' << est.values[i] << '\n';
    if (as_json && !o.output.empty() && o.output != "-")
        std::cout << json{{"h", bw.h}, {"bandwidth_rule", bw.rule}, {"grid_points", grid.x.size()},
                          {"spacing", grid.spacing}, {"output", o.output}}
                         .dump(2)
                  << '\n';
    return 0;
}

int run_band(const data_options& o, const band_options& b, const density_options& dopt, const taper_options& topt,
             unsigned threads, bool as_json) {
    const auto density = make_density(dopt);
    const auto taper = make_taper(topt);
    const auto sample = read_sample(o.input, o.a_n);
    const auto bw = choose_bandwidth(o, sample, density, taper, threads);
    const auto& d = sample.design;

    band_request req;
    req.a = o.interval[0];
    req.b = o.interval[1];
    req.alpha = b.alpha;
    req.draws = b.draws;
    req.h = bw.h;
    req.seed = b.seed;
    req.h_v = b.h_v;
    req.grid_refine = b.grid_refine;
    req.threads = threads;

    band_result r;
    int d_n = 0;
    double b_n = 0.0;
    if (b.extension) {
        d_n = b.d_n > 0 ? b.d_n : default_split_period(d.n);
        b_n = b.b_n > 0.0 ? b.b_n : default_truncation(d.n, d.a_n);
        r = build_band_extension(sample, req, density, taper, d_n, b_n);
    } else {
        r = build_band(sample, req, density, taper);
    }
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';

    const std::string csv = o.output.empty() ? "band.csv" : o.output;
    {
        std::ofstream file;
        auto& out = open_output(csv, file);
        out << std::setprecision(17) << "x,ghat,nuhat,lower,upper\n";
        for (std::size_t i = 0; i < r.grid.size(); ++i)
            out << r.grid[i] << ',' << r.ghat[i] << ',' << r.nuhat[i] << ',' << r.lower[i] << ',' << r.upper[i] << '\n';
    }
    json side{{"quantile", r.quantile},
              {"h", r.h},
              {"alpha", r.alpha},
              {"M", r.draws},
              {"seed", r.seed},
              {"spacing", r.spacing},
              {"beta", r.beta},
              {"grid_points", r.grid.size()},
              {"mean_width", r.mean_width()},
              {"nu_floor", r.nu_floor},
              {"floor_active", r.floor_active},
              {"bandwidth_rule", bw.rule},
              {"extension", r.extension},
              {"warnings", r.warnings}};
    if (r.extension) {
        side["d_n"] = d_n;
        side["b_n"] = b_n;
    }
    if (csv != "-") {
        const auto sidecar = std::filesystem::path(csv).replace_extension(".json");
        std::ofstream js(sidecar);
        if (!js) throw std::runtime_error("cannot write '" + sidecar.string() + "'");
        js << side.dump(2) << '\n';
    }
    if (as_json) std::cout << side.dump(2) << '\n';
    return 0;
}

struct simulate_options {
    std::string scenario;
    std::optional<int> reps;
    std::optional<int> bootstrap;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool progress = false;
};

int run_simulate(const simulate_options& o, unsigned threads, bool as_json) {
    scenario s;
    if (std::filesystem::is_regular_file(o.scenario)) {
        std::ifstream in(o.scenario);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw config_error("scenario", std::string("invalid JSON: ") + e.what());
        }
        s = scenario_from_json(j);
        if (s.name == "custom") s.name = std::filesystem::path(o.scenario).stem().string();
    } else {
        s = preset_scenario(o.scenario);
    }
    if (o.reps) s.reps = *o.reps;
    if (o.bootstrap) s.bootstrap = *o.bootstrap;
    if (o.seed) s.seed = *o.seed;
    s.validate();

    run_options opts;
    opts.threads = threads;
    opts.cancel = &interrupted;
    std::atomic<int> done{0};
    if (o.progress)
        opts.on_rep = [&](const rep_record&) {
            const int k = ++done;
            if (k % 10 == 0 || k == s.reps) std::cerr << "\rreplications " << k << '/' << s.reps << std::flush;
        };
    std::signal(SIGINT, on_sigint);
    const auto report = run_scenario(s, opts);
    std::signal(SIGINT, SIG_DFL);
    if (o.progress) std::cerr << '\n';

    const std::string dir = o.out.empty() ? "simulation-" + s.name : o.out;
    export_report(report, dir);
    auto summary = report_summary_json(report);
    summary["scenario_config"] = scenario_to_json(s);
    if (as_json)
        std::cout << summary.dump(2) << '\n';
    else
        std::cout << s.name << ": rejection " << 100.0 * report.rejection_rate << "%, mean width " << report.mean_width
                  << ", " << report.reps.size() << '/' << report.reps_requested << " replications, "
                  << report.runtime_seconds << " s -> " << dir << '\n';
    if (report.interrupted) {
        std::cerr << "interrupted: partial results written to " << dir << '\n';
        return 1;
    }
    return 0;
}

struct dump_options {
    double h = 0.0;
    double a_n = 2.0 / 3.0;
    std::optional<double> span;
    std::optional<std::size_t> grid_len;
    std::string output;
};

int run_kernel_dump(const dump_options& o, const density_options& dopt, const taper_options& topt, bool as_json) {
    const auto density = make_density(dopt);
    const auto taper = make_taper(topt);
    const double span = o.span ? *o.span : default_span(o.a_n, o.h);
    const std::size_t len = o.grid_len ? *o.grid_len : default_grid_len(taper, span);
    const auto k = make_kernel_table(taper, density, o.h, len, span);
    std::ofstream file;
    auto& out = open_output(o.output, file);
    out << std::setprecision(17) << "u,K\n";
    for (std::size_t i = 0; i < k.size(); ++i) out << k.node(i) << ',' << k.values()[i] << '\n';
    if (as_json && !o.output.empty() && o.output != "-")
        std::cout << json{{"h", k.h()}, {"du", k.du()}, {"nodes", k.size()}, {"span", k.span()},
                          {"imag_residual", k.imag_residual()}, {"K0", k(0.0)}}
                         .dump(2)
                  << '\n';
    return 0;
}

struct check_row {
    std::string name;
    double error = 0.0;
    double tolerance = 0.0;
    bool pass() const { return error <= tolerance; }
};

int run_selftest(unsigned threads, bool as_json) {
    std::vector<check_row> rows;
    const std::vector<std::pair<std::string, error_density>> densities{
        {"laplace", error_density::laplace_sd(0.1)},
        {"mixture", error_density::laplace_mixture(std::numbers::sqrt2 / 0.05, 0.2, 0.3)}};

    std::mt19937_64 rng(20240607);
    for (const auto& [label, density] : densities)
        for (const auto& taper : {damped_taper(), taper_spec{}}) {
            double worst = 0.0;
            for (double h : {0.1, 0.25, 0.5}) {
                const auto table = table_for(taper, density, h, 2.0 / 3.0);
                const auto& k = *table;
                std::uniform_real_distribution<double> u(-std::min(k.span(), 40.0), std::min(k.span(), 40.0));
                const double scale = std::max(1.0, std::abs(k(0.0)));
                for (int i = 0; i < 8; ++i) {
                    const double w = u(rng);
                    worst = std::max(worst, std::abs(k(w) - kernel_eval(taper, density, w, h)) / scale);
                }
            }
            rows.push_back({"kernel table vs quadrature (" + label + ", " +
                                (taper.kind == taper_kind::smooth_poly ? "smooth" : "damped") + ")",
                            worst, 1e-6});
        }

    for (const auto& [label, density] : densities) {
        double worst = 0.0;
        const double r = density_tail_radius(density);
        for (double t : {0.0, 1.0, 7.5, 30.0}) {
            const double ft = integrate([&](double x) { return std::cos(t * x) * density_eval(density, x); }, -r, r,
                                        density_kinks(density), std::min(0.05, 1.0 / (1.0 + t)), 1e-10);
            worst = std::max(worst, std::abs(ft - charfn(density, t)));
        }
        rows.push_back({"density transform vs charfn (" + label + ")", worst, 1e-8});
    }

    {
        const auto design = build_regular(100, 2.0 / 3.0);
        band_request req;
        req.h = 0.25;
        req.threads = threads;
        const band_engine engine(design, req, densities[0].second, damped_taper());
        const auto proc = engine.process(nullptr);
        const std::size_t m = engine.grid().x.size();
        double worst = 0.0;
        const int draws = 4000;
        for (std::size_t i : {std::size_t{0}, m / 3, 2 * m / 3, m - 1}) {
            double acc = 0.0;
            for (int r = 0; r < draws; ++r) {
                const double v = proc.path(proc.draw_multipliers(static_cast<std::uint64_t>(r) + 1))(static_cast<Eigen::Index>(i));
                acc += v * v;
            }
            worst = std::max(worst, std::abs(acc / draws / proc.variance(i) - 1.0));
        }
        rows.push_back({"multiplier variance vs closed form (relative)", worst, 0.08});
    }

    bool all = true;
    json j = json::array();
    for (const auto& r : rows) {
        all = all && r.pass();
        j.push_back({{"check", r.name}, {"error", r.error}, {"tolerance", r.tolerance}, {"pass", r.pass()}});
        if (!as_json)
            std::cout << (r.pass() ? "PASS " : "FAIL ") << std::left << std::setw(52) << r.name << std::right
                      << " error " << std::scientific << std::setprecision(2) << r.error << " <= " << r.tolerance
                      << std::defaultfloat << '\n';
    }
    if (as_json) std::cout << json{{"checks", j}, {"pass", all}}.dump(2) << '\n';
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Confidence bands for deconvolution regression with Berkson errors"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    bool as_json = false;
    unsigned threads = 0;
    app.add_flag("--json", as_json, "Machine-readable summaries on stdout");
    app.add_option("--threads", threads, "Worker threads (0: BB_THREADS or all cores)");

    density_options dens;
    taper_options taper;
    data_options data;
    band_options band;
    simulate_options sim;
    dump_options dump;

    auto* est = app.add_subcommand("estimate", "Deconvolution estimate on the evaluation grid");
    add_density_options(est, dens);
    add_taper_options(est, taper);
    add_data_options(est, data);

    auto* bnd = app.add_subcommand("band", "Uniform confidence band");
    add_density_options(bnd, dens);
    add_taper_options(bnd, taper);
    add_data_options(bnd, data);
    bnd->add_option("--alpha", band.alpha, "Level: the band has coverage 1 - alpha");
    bnd->add_option("--M", band.draws, "Bootstrap draws");
    bnd->add_option("--seed", band.seed, "Seed of the multiplier draws");
    bnd->add_option("--h-v", band.h_v, "Variance smoothing bandwidth (0: default)");
    bnd->add_option("--grid-refine", band.grid_refine, "Divide the grid spacing bound by this factor");
    bnd->add_flag("--extension", band.extension, "Sample-split band for densities with zeros in the transform");
    bnd->add_option("--d-n", band.d_n, "Split period (0: default)");
    bnd->add_option("--b-n", band.b_n, "Truncation fraction (0: default)");

    auto* simc = app.add_subcommand("simulate", "Monte Carlo coverage and width study");
    simc->add_option("--scenario", sim.scenario, "Preset name or JSON scenario file")->required();
    simc->add_option("--reps", sim.reps, "Replications");
    simc->add_option("--bootstrap", sim.bootstrap, "Bootstrap draws per replication");
    simc->add_option("--seed", sim.seed, "Root seed");
    simc->add_option("--out", sim.out, "Output directory");
    simc->add_flag("--progress", sim.progress, "Report progress on stderr");

    auto* kd = app.add_subcommand("kernel-dump", "Tabulate the deconvolution kernel");
    add_density_options(kd, dens);
    add_taper_options(kd, taper);
    kd->add_option("--h", dump.h, "Bandwidth")->required();
    kd->add_option("--a-n", dump.a_n, "Design parameter setting the default span");
    kd->add_option("--span", dump.span, "Half-width of the tabulated range");
    kd->add_option("--grid-len", dump.grid_len, "Table resolution (power of two)");
    kd->add_option("--output", dump.output, "Output CSV (default stdout)");

    auto* st = app.add_subcommand("selftest", "Oracle agreement checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        threads = resolve_threads(threads);
        if (est->parsed()) return run_estimate(data, dens, taper, threads, as_json);
        if (bnd->parsed()) return run_band(data, band, dens, taper, threads, as_json);
        if (simc->parsed()) return run_simulate(sim, threads, as_json);
        if (kd->parsed()) return run_kernel_dump(dump, dens, taper, as_json);
        if (st->parsed()) return run_selftest(threads, as_json);
    } catch (const config_error& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
