#include "berkson/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>

#include "berkson/errors.hpp"

namespace berkson {

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const std::vector<double>& breakpoints, double max_panel, double tol) {
    if (!(hi > lo)) return 0.0;
    std::vector<double> cuts{lo, hi};
    for (double b : breakpoints)
        if (b > lo && b < hi) cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());

    using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i];
        const double b = cuts[i + 1];
        int pieces = 1;
        if (max_panel > 0.0) pieces = std::max(1, static_cast<int>(std::ceil((b - a) / max_panel)));
        const double step = (b - a) / pieces;
        for (int p = 0; p < pieces; ++p) {
            const double pa = a + p * step;
            const double pb = (p + 1 == pieces) ? b : pa + step;
            double err = 0.0;
            double l1 = 0.0;
            const double v = gk::integrate(f, pa, pb, 15, tol, &err, &l1);
            if (!std::isfinite(v) || err > 1e-6 * l1 + 1e-9) {
                char msg[160];
                std::snprintf(msg, sizeof msg, "quadrature did not converge on [%g, %g] (error %.3g)", pa, pb, err);
                throw numerical_error(msg);
            }
            total += v;
        }
    }
    return total;
}

}  // namespace berkson
