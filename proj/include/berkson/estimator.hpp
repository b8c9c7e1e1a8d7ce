#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "berkson/deconv_kernel.hpp"
#include "berkson/design.hpp"
#include "berkson/noise_models.hpp"

namespace berkson {

using regression_fn = std::function<double(double)>;

struct regression_sample {
    fixed_design design;
    std::vector<double> y;

    void validate() const;
};

struct estimate_curve {
    std::vector<double> grid;
    std::vector<double> values;
    double h = 0.0;
    double beta = 0.0;
};

// (1/(n a_n)) sum_j Y_j e^{i t w_j}; design weights replace 1/(n a_n) in general.
std::complex<double> phi_gamma_hat(const regression_sample& sample, double t);

// Rows: grid points x_i. Columns: the selected design indices (j + n).
// Entry: col_weight_k / h * K((w_j - x_i)/h; h).
Eigen::MatrixXd smoother_matrix(const fixed_design& design, std::span<const double> grid,
                                const kernel_table& kernel, std::span<const std::size_t> columns,
                                std::span<const double> col_weights);
Eigen::MatrixXd smoother_matrix(const fixed_design& design, std::span<const double> grid,
                                const kernel_table& kernel);

// Throws unless every x lies in the design span and the table covers all kernel arguments.
void check_evaluation_range(const fixed_design& design, std::span<const double> grid,
                            const kernel_table& kernel);

// Kernel-sum form: ghat(x) = sum_j weight_j / h * Y_j K((w_j - x)/h; h).
estimate_curve estimate_g(const regression_sample& sample, double h, std::span<const double> grid,
                          const kernel_table& kernel);

// Fourier form: (1/2pi) int e^{-itx} Phi_k(ht) phi_gamma_hat(t) / Phi_f(-t) dt by a
// Gregory-corrected trapezoid rule over the taper support.
estimate_curve estimate_g_fourier(const regression_sample& sample, double h,
                                  std::span<const double> grid, const taper_spec& taper,
                                  const error_density& density);

double oracle_gamma(const regression_fn& g, const error_density& density, double w);
double oracle_nu2(const regression_fn& g, const error_density& density, double sigma2, double w);

// gamma(w_j) and nu^2(w_j) tabulated on a design.
struct calibrated_model {
    std::vector<double> gamma;
    std::vector<double> nu2;
};
calibrated_model tabulate_calibrated(const regression_fn& g, const error_density& density,
                                     double sigma2, const fixed_design& design);

double oracle_mean(const calibrated_model& model, const fixed_design& design,
                   const kernel_table& kernel, double x);
double oracle_variance(const calibrated_model& model, const fixed_design& design,
                       const kernel_table& kernel, double x);
double oracle_mean(const regression_fn& g, const error_density& density, const fixed_design& design,
                   const kernel_table& kernel, double x);
double oracle_variance(const regression_fn& g, const error_density& density, double sigma2,
                       const fixed_design& design, const kernel_table& kernel, double x);

}  // namespace berkson
