#include "kam/numerics.hpp"

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace kam::numerics {

double bracketed_root(const std::function<double(double)>& f, double a, double b, double fa, double fb) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0)) throw std::invalid_argument("bracketed_root: no sign change on the bracket");
    std::uintmax_t max_iter = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 1);
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, max_iter);
    // pick the endpoint with the smaller residual
    const double lo = f(r.first), hi = f(r.second);
    return std::abs(lo) <= std::abs(hi) ? r.first : r.second;
}

Minimum golden_minimum(const std::function<double(double)>& f, double a, double b, double x_tol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    Minimum best = fc <= fd ? Minimum{c, fc} : Minimum{d, fd};
    for (int it = 0; it < 400 && (b - a) > x_tol * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
            if (fc < best.value) best = {c, fc};
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
            if (fd < best.value) best = {d, fd};
        }
    }
    return best;
}

std::vector<double> grid_roots(const std::function<double(double)>& f, double a, double b, int cells,
                               double touch_tol) {
    if (cells < 2) throw std::invalid_argument("grid_roots: need at least 2 cells");
    const double h = (b - a) / cells;
    std::vector<double> x(cells + 1), y(cells + 1);
    for (int i = 0; i <= cells; ++i) {
        x[i] = i == cells ? b : a + i * h;
        y[i] = f(x[i]);
    }
    std::vector<double> roots;
    for (int i = 0; i < cells; ++i) {
        if (y[i] == 0.0) {
            roots.push_back(x[i]);
        } else if (y[i + 1] != 0.0 && (y[i] > 0) != (y[i + 1] > 0)) {
            roots.push_back(bracketed_root(f, x[i], x[i + 1], y[i], y[i + 1]));
        }
    }
    if (y[cells] == 0.0) roots.push_back(x[cells]);
    if (touch_tol >= 0.0) {
        for (int i = 1; i < cells; ++i) {
            const double m = std::abs(y[i]);
            if (m > 0 && m <= std::abs(y[i - 1]) && m <= std::abs(y[i + 1]) && (y[i - 1] > 0) == (y[i] > 0) &&
                (y[i + 1] > 0) == (y[i] > 0)) {
                auto g = [&](double t) { return std::abs(f(t)); };
                auto mn = golden_minimum(g, x[i - 1], x[i + 1]);
                if (mn.value <= touch_tol) roots.push_back(mn.x);
            }
        }
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

} // namespace kam::numerics
