#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace kam::numerics {

/// Root of f in [a, b] given a sign change, polished to machine precision (TOMS 748).
double bracketed_root(const std::function<double(double)>& f, double a, double b, double fa, double fb);

struct Minimum {
    double x;
    double value;
};

/// Golden-section search on [a, b]; converges on kinked (|.|-type) minima as well.
Minimum golden_minimum(const std::function<double(double)>& f, double a, double b, double x_tol = 1e-15);

/// Isolated roots of f in [a, b] found from sign changes on a uniform grid of `cells` cells,
/// plus grid-local minima of |f| that polish to |f| <= touch_tol (tangential roots).
std::vector<double> grid_roots(const std::function<double(double)>& f, double a, double b, int cells,
                               double touch_tol = -1.0);

} // namespace kam::numerics
