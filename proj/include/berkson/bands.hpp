#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "berkson/deconv_kernel.hpp"
#include "berkson/design.hpp"
#include "berkson/estimator.hpp"
#include "berkson/variance_estimation.hpp"

namespace berkson {

struct eval_grid {
    std::vector<double> x;
    double spacing = 0.0;
};

// Largest admissible grid spacing sqrt(h) / (n sqrt(a_n)).
double grid_spacing_bound(int n, double a_n, double h);

// Uniform grid on [a, b] with spacing <= bound / refine, endpoints included.
// Rejects intervals outside [-1/a_n + h, 1/a_n - h].
eval_grid make_eval_grid(double a, double b, int n, double a_n, double h, double refine = 1.0);

struct band_request {
    double a = -0.7;
    double b = 0.6;
    double alpha = 0.05;
    int draws = 250;
    double h = 0.0;
    std::uint64_t seed = 0;
    double h_v = 0.0;         // 0: default variance bandwidth
    double grid_refine = 1.0;
    unsigned threads = 1;

    void validate() const;
};

struct band_result {
    std::vector<double> grid;
    std::vector<double> ghat;
    std::vector<double> nuhat;
    std::vector<double> half_width;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> sups;
    double quantile = 0.0;
    double spacing = 0.0;
    double h = 0.0;
    double beta = 0.0;
    double alpha = 0.0;
    int draws = 0;
    std::uint64_t seed = 0;
    double nu_floor = 0.0;
    bool floor_active = false;
    bool extension = false;
    std::vector<std::string> warnings;

    double mean_width() const;
    bool covers(std::span<const double> truth) const;
};

// Empirical quantile: the ceil(M level)-th order statistic.
double quantile(std::vector<double> sups, double level);

// Gaussian multiplier process
//   G(x_i) = sqrt(n a_n h^{1+2 beta}) r_i sum_c (v_c / h) K((w_c - x_i)/h; h) Z_c
// over selected design columns c, with row scales r_i and column weights v_c.
// Multipliers Z are drawn for every design index from a generator seeded with
// the draw seed, so column subsets share draws.
class multiplier_process {
public:
    multiplier_process(const fixed_design& design, std::span<const double> grid, const kernel_table& kernel,
                       std::vector<std::size_t> columns, std::span<const double> col_weights,
                       std::span<const double> row_scale);
    // Builds from a precomputed smoother block (entries v_c / h K(...)).
    multiplier_process(const fixed_design& design, const Eigen::MatrixXd& smoother,
                       std::vector<std::size_t> columns, std::span<const double> row_scale, double h,
                       double beta);

    std::size_t design_size() const { return design_size_; }
    std::size_t grid_size() const { return static_cast<std::size_t>(weights_.cols()); }

    std::vector<double> draw_multipliers(std::uint64_t seed) const;
    Eigen::VectorXd path(std::span<const double> z) const;
    double sup(std::span<const double> z) const;
    double sup_draw(std::uint64_t seed) const;
    // Sups for seeds root + i, i < count.
    std::vector<double> sups(std::size_t count, std::uint64_t root, unsigned threads) const;
    // Closed-form Var G(x_i).
    double variance(std::size_t i) const;

private:
    std::size_t design_size_ = 0;
    std::vector<std::size_t> columns_;
    Eigen::MatrixXd weights_;  // columns x grid, scaled
};

// Baseline process sup for one draw.
double multiplier_sup_draw(const fixed_design& design, const kernel_table& kernel,
                           std::span<const double> grid, std::uint64_t seed);

// Precomputes grid, kernel table and smoother for repeated band construction
// on a fixed design (baseline or sample-split extension).
class band_engine {
public:
    band_engine(const fixed_design& design, const band_request& request, const error_density& density,
                const taper_spec& taper, std::shared_ptr<const kernel_table> kernel = nullptr);
    band_engine(const fixed_design& design, const band_request& request, const error_density& density,
                const taper_spec& taper, const split_mask& mask,
                std::shared_ptr<const kernel_table> kernel = nullptr);

    const eval_grid& grid() const { return grid_; }
    const kernel_table& kernel() const { return *kernel_; }
    const band_request& request() const { return request_; }
    bool is_extension() const { return mask_.has_value(); }
    const split_mask& mask() const { return *mask_; }
    double variance_bandwidth() const { return h_v_; }

    // seed overrides request().seed for the multiplier draws.
    band_result build(const regression_sample& sample, const variance_curve* nu = nullptr,
                      std::optional<std::uint64_t> seed = std::nullopt) const;
    // Process used for the given variance curve (baseline ignores it).
    multiplier_process process(const variance_curve* nu) const;

private:
    void prepare(const error_density& density, const taper_spec& taper,
                 std::shared_ptr<const kernel_table> kernel);

    fixed_design design_;
    band_request request_;
    std::optional<split_mask> mask_;
    eval_grid grid_;
    std::shared_ptr<const kernel_table> kernel_;
    double h_v_ = 0.0;
    std::vector<std::size_t> columns_;        // estimator columns
    std::vector<std::size_t> process_cols_;   // positions within columns_ used by the process
    std::vector<std::size_t> held_out_;       // indices feeding the variance estimate
    Eigen::MatrixXd smoother_;                // grid x columns_
    std::optional<multiplier_process> baseline_;
    std::vector<std::string> warnings_;
};

band_result build_band(const regression_sample& sample, const band_request& request,
                       const error_density& density, const taper_spec& taper,
                       const variance_curve* nu = nullptr);

band_result build_band_extension(const regression_sample& sample, const band_request& request,
                                 const error_density& density, const taper_spec& taper, int d_n,
                                 double b_n, const variance_curve* nu = nullptr);

}  // namespace berkson
