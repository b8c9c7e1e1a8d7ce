#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "berkson/deconv_kernel.hpp"
#include "berkson/estimator.hpp"

namespace berkson {

struct lepski_config {
    int k_lower = 1;
    int k_upper = 8;
    double c_l = 1.0;
    double beta = 2.0;
    double a_n = 2.0 / 3.0;
    double m_bar = 4.0;
    double a = -0.7;
    double b = 0.6;
    unsigned threads = 1;

    void validate() const;
};

// k_upper = round(log2 n); k_lower = round(-log2(((ln n)/(n a_n))^{1/(beta + m_bar)})).
lepski_config default_lepski_config(int n, double a_n, double beta, double a, double b,
                                    double m_bar = 4.0, double c_l = 1.0);

struct lepski_result {
    int k_hat = 0;
    double h = 0.0;
    bool admissible_found = true;
    std::vector<double> bandwidths;              // h_k for k = k_lower..k_upper
    std::vector<double> thresholds;              // per l
    std::vector<std::vector<double>> deviation;  // [k][l] sup-norm distances, l >= k
};

using kernel_factory = std::function<std::shared_ptr<const kernel_table>(double h)>;

lepski_result lepski_select(const regression_sample& sample, const lepski_config& config,
                            const kernel_factory& kernels);

double undersmooth(double h, double n);

// Regularization parameters of the simulation study keyed by scenario name
// (e.g. "ga-100-0.1", "gb-750-0.05", "ext-100").
double preset_bandwidth(const std::string& scenario);
std::vector<std::string> preset_names();

}  // namespace berkson
