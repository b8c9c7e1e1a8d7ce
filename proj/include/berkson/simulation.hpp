#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "berkson/bands.hpp"
#include "berkson/deconv_kernel.hpp"
#include "berkson/estimator.hpp"
#include "berkson/noise_models.hpp"

namespace berkson {

enum class signal_kind { g_a, g_b };

double signal_eval(signal_kind signal, double x);
regression_fn signal_function(signal_kind signal);
signal_kind parse_signal(const std::string& name);
std::string signal_name(signal_kind signal);

struct scenario {
    std::string name = "custom";
    signal_kind signal = signal_kind::g_a;
    int n = 100;
    double sigma = 0.1;
    double a_n = 2.0 / 3.0;
    double h = 0.25;
    double a = -0.7;
    double b = 0.6;
    int reps = 500;
    int bootstrap = 250;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    error_density density = error_density::laplace_sd(0.1);
    taper_spec taper = damped_taper();
    bool extension = false;
    int d_n = 0;      // 0: default split period
    double b_n = 0.0; // 0: default truncation
    double h_v = 0.0; // 0: default variance bandwidth

    void validate() const;
};

// Named scenarios of the simulation study: "ga-100-0.1", ..., "gb-750-0.05",
// "ext-100", "ext-750".
scenario preset_scenario(const std::string& name);
std::vector<std::string> preset_scenario_names();

// Declarative scenario format; unknown keys are rejected.
scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const scenario& s);
error_density density_from_json(const nlohmann::json& j);
nlohmann::json density_to_json(const error_density& d);
taper_spec taper_from_json(const nlohmann::json& j);
nlohmann::json taper_to_json(const taper_spec& t);

// Y_j = g(w_j + Delta_j) + eps_j with Gaussian eps.
regression_sample generate_sample(const scenario& s, std::uint64_t rep_seed);

struct rep_record {
    int rep = 0;
    bool covered = false;
    double width = 0.0;
    double quantile = 0.0;
};

struct scenario_report {
    std::string scenario;
    int reps_requested = 0;
    std::vector<rep_record> reps;
    double rejection_rate = 0.0;
    double mean_width = 0.0;
    double runtime_seconds = 0.0;
    double spacing = 0.0;
    std::size_t grid_points = 0;
    bool interrupted = false;
    // Representative band (first replication) with the true signal on its grid.
    band_result representative;
    std::vector<double> truth;

    void summarize();
};

struct run_options {
    unsigned threads = 0;
    std::function<void(const rep_record&)> on_rep;
    const std::atomic<bool>* cancel = nullptr;
};

scenario_report run_scenario(const scenario& s, const run_options& options = {});

// Writes reps.csv, summary.json and band.csv into dir (created if missing).
void export_report(const scenario_report& report, const std::filesystem::path& dir);
nlohmann::json report_summary_json(const scenario_report& report);
scenario_report read_report_summary(const std::filesystem::path& dir);

}  // namespace berkson
