#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace berkson {

// Fixed design w_{-n}, ..., w_n stored in ascending order (index j + n).
struct fixed_design {
    int n = 0;
    double a_n = 0.0;
    bool regular = true;
    std::vector<double> points;
    std::vector<double> weights;

    std::size_t size() const { return points.size(); }
    double point(int j) const { return points[static_cast<std::size_t>(j + n)]; }
    double weight(int j) const { return weights[static_cast<std::size_t>(j + n)]; }
    double half_span() const { return points.back(); }
};

fixed_design build_regular(int n, double a_n);

// Design density on [0, support_end]; negative points are mirrored.
struct design_density {
    std::function<double(double)> f;
    double support_end = 0.0;
};

// Solves j/(n+1) = int_0^{w_j} f for j = 1..n by bisection. Weights are
// 1/(n f(w_j)); the design parameter is recorded as 1/w_n.
fixed_design build_from_density(const design_density& density, int n);

// Sample split: every d_n-th point (counted from -n) is held out.
struct split_mask {
    int d_n = 0;
    double b_n = 1.0;
    std::vector<char> kept;        // per index j + n
    std::vector<int> removed;      // j values, ascending
    std::vector<double> gaps;      // per index; zero for removed points
    std::vector<int> truncated;    // kept j with |j| <= n b_n, ascending

    bool is_kept(int j, int n) const { return kept[static_cast<std::size_t>(j + n)] != 0; }
};

split_mask build_split(const fixed_design& design, int d_n, double b_n);

int default_split_period(int n);
double default_truncation(int n, double a_n);

}  // namespace berkson
