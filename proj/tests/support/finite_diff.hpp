#pragma once

// Central finite-difference oracle used to check analytic gradients.
// Deliberately independent of the tape's reverse pass: it only ever calls
// the function under test forward.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// d/dx_i f(x) for every i, central differences with step h.
inline std::vector<double> grad_fd(const std::function<double(const std::vector<double>&)>& f,
                                   std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f(x);
        x[i] = orig - h;
        const double fm = f(x);
        x[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// relative error with an absolute floor so near-zero components do not
// blow the ratio up
inline double rel_err(double a, double b, double floor = 1e-6) {
    const double scale = std::max(floor, std::max(std::fabs(a), std::fabs(b)));
    return std::fabs(a - b) / scale;
}

inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b,
                          double floor = 1e-6) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, rel_err(a[i], b[i], floor));
    return m;
}

} // namespace oracle
