#pragma once

#include <functional>
#include <vector>

namespace berkson {

// Adaptive Gauss-Kronrod integration of f over [lo, hi]. The range is cut at
// the given breakpoints and into panels no longer than max_panel; each piece is
// integrated adaptively to the requested tolerance (relative to the panel
// integral's L1 norm). Throws numerical_error when a panel fails to converge.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const std::vector<double>& breakpoints = {}, double max_panel = 0.0,
                 double tol = 1e-12);

}  // namespace berkson
