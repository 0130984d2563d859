#include "kam/one_dof.hpp"

#include "kam/numerics.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

namespace kam {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double integrate(const std::function<double(double)>& f, double a, double b) {
    static thread_local boost::math::quadrature::tanh_sinh<double> ts(15);
    if (a == b) return 0.0;
    double err = 0.0, l1 = 0.0;
    return ts.integrate(f, a, b, 1e-13, &err, &l1);
}

double oscillation(const OneDProfile& F) {
    if (F.is_zero()) return 0.0;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& cp : critical_points(F)) {
        const double v = F.eval(cp.xi);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

// One piece of the orbit. Turning pieces use xi = t + (c - t) s^2, s in [0, 1]; regular pieces
// integrate in xi over [lo, hi] with E - F written relative to the anchor a.
struct Segment {
    bool turning = false;
    // t: bracketed root, r = E - F(t) >= 0, v0: Newton offset to the exact turning point t + v0
    double t = 0.0, c = 0.0, r = 0.0, v0 = 0.0, t_prime = 0.0;
    // below s_min the integrand is replaced by its value at s_min (rounding floor of E - F)
    double s_min = 1e-12;
    double lo = 0.0, hi = 0.0, a = 0.0, Ea = 0.0;
};

struct Orbit {
    std::vector<Segment> segments;
    double multiplicity = 1.0; // 2 for librations (both signs of eta)
};

struct Turning {
    double t;
    double r; // E - F(t) >= 0
};

Turning turning_point(const OneDProfile& F, double E, double x_max, double x_min) {
    // anchor at the end whose value is closer to E keeps E - F accurate near the root
    const double f_max = F.eval(x_max), f_min = F.eval(x_min);
    const double a = std::abs(f_max - E) <= std::abs(E - f_min) ? x_max : x_min;
    const double Ea = E - F.eval(a);
    auto g = [&](double x) { return Ea - F.difference(a, x - a); };
    const double g_max = g(x_max), g_min = g(x_min);
    if (g_max >= 0.0) return {x_max, g_max};
    if (!(g_min > 0.0)) throw std::runtime_error("turning point bracketing failed (non-Morse input?)");
    double lo = std::min(x_max, x_min), hi = std::max(x_max, x_min);
    double glo = x_max < x_min ? g_max : g_min, ghi = x_max < x_min ? g_min : g_max;
    std::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 1);
    auto br = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, tol, iters);
    // keep the end on the allowed side so that E - F(t) >= 0
    const double g1 = g(br.first);
    if (g1 >= 0.0) return {br.first, g1};
    return {br.second, std::max(0.0, g(br.second))};
}

Segment regular(const OneDProfile& F, double E, double lo, double hi) {
    Segment s;
    s.lo = lo;
    s.hi = hi;
    s.a = std::abs(F.eval(lo) - E) <= std::abs(F.eval(hi) - E) ? lo : hi;
    s.Ea = E - F.eval(s.a);
    return s;
}

Segment turning(const OneDProfile& F, Turning tp, double c) {
    Segment s;
    s.turning = true;
    s.t = tp.t;
    s.c = c;
    s.r = tp.r;
    const double f1 = F.eval(tp.t, 1);
    if (f1 != 0.0) {
        s.v0 = tp.r / f1;
        // second Newton step removes the F'' v0^2 / 2 residual
        const double r1 = tp.r - F.difference(tp.t, s.v0);
        const double f1b = f1 + F.difference(tp.t, s.v0, 1);
        if (f1b != 0.0) s.v0 += r1 / f1b;
        const double eps = std::numeric_limits<double>::epsilon();
        const double floor = 1e3 * eps * (tp.r + F.derivative_bound(1) * std::abs(s.v0) + eps * eps);
        s.s_min = std::max(1e-12, std::sqrt(floor / (std::abs(f1) * std::abs(c - tp.t))));
    }
    s.t_prime = 1.0 / f1;
    return s;
}

void check_inside(const PhaseComponent& c, double E, bool closed) {
    const bool ok = closed ? (E >= c.e_a && E <= c.e_b) : (E > c.e_a && E < c.e_b);
    if (!ok || !std::isfinite(E))
        throw std::out_of_range("energy " + std::to_string(E) + " outside component " + std::to_string(c.id));
}

Orbit build_orbit(const OneDProfile& F, const PhaseComponent& comp, double E) {
    Orbit o;
    std::vector<double> pts;
    pts.push_back(comp.arc_lo);
    pts.insert(pts.end(), comp.interior.begin(), comp.interior.end());
    pts.push_back(comp.arc_hi);
    if (comp.kind != ComponentKind::libration) {
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) o.segments.push_back(regular(F, E, pts[i], pts[i + 1]));
        return o;
    }
    o.multiplicity = 2.0;
    const std::size_t k = comp.interior.size();
    const Turning tL = turning_point(F, E, comp.arc_lo, comp.interior.front());
    const Turning tR = turning_point(F, E, comp.arc_hi, comp.interior.back());
    o.segments.push_back(turning(F, tL, comp.interior.front()));
    for (std::size_t i = 0; i + 1 < k; ++i)
        o.segments.push_back(regular(F, E, comp.interior[i], comp.interior[i + 1]));
    o.segments.push_back(turning(F, tR, comp.interior.back()));
    return o;
}

// E - F(xi) on a regular segment.
double gap_at(const OneDProfile& F, const Segment& s, double xi) { return s.Ea - F.difference(s.a, xi - s.a); }

enum class Moment { action, period, period_derivative };

double segment_integral(const OneDProfile& F, const Segment& s, Moment m) {
    if (!s.turning) {
        return integrate(
            [&](double xi) {
                const double u = std::max(gap_at(F, s, xi), 0.0);
                switch (m) {
                case Moment::action: return std::sqrt(2.0 * u);
                case Moment::period: return 1.0 / std::sqrt(2.0 * u);
                default: return -std::pow(2.0 * u, -1.5);
                }
            },
            s.lo, s.hi);
    }
    // xi = t + v0 + (c - t - v0) s^2 starts exactly at the turning point; a start at the rounded
    // root t would drop a sqrt(r)-sized piece of the period
    const double dc = s.c - s.t - s.v0, adc = std::abs(dc);
    const double d1_star = F.difference(s.t, s.v0, 1); // F'(t + v0) - F'(t)
    return integrate(
        [&](double s_raw) {
            const double sv = std::max(s_raw, s.s_min);
            // offsets from t are kept exact; t + v would round them to ulp(t)
            const double v = s.v0 + dc * sv * sv;
            const double xi = s.t + v;
            const double u = std::max(s.r - F.difference(s.t, v), 0.0);
            switch (m) {
            case Moment::action: return 2.0 * adc * sv * std::sqrt(2.0 * u);
            case Moment::period: return 2.0 * adc * sv / std::sqrt(2.0 * u);
            default: {
                const double f1 = F.eval(xi, 1);
                const double num = d1_star - F.difference(s.t, v, 1) + f1 * sv * sv;
                const double sign = dc > 0 ? 1.0 : -1.0;
                return -2.0 * sign * s.t_prime * sv / std::sqrt(2.0 * u) -
                       2.0 * adc * sv * std::pow(2.0 * u, -1.5) * num * s.t_prime;
            }
            }
        },
        0.0, 1.0);
}

double orbit_integral(const OneDProfile& F, const Orbit& o, Moment m) {
    double total = 0.0;
    for (const auto& s : o.segments) total += segment_integral(F, s, m);
    return o.multiplicity * total;
}

} // namespace

const char* to_string(ComponentKind k) {
    switch (k) {
    case ComponentKind::libration: return "libration";
    case ComponentKind::rotation_upper: return "rotation_upper";
    case ComponentKind::rotation_lower: return "rotation_lower";
    }
    return "?";
}

const char* to_string(EdgeType e) {
    switch (e) {
    case EdgeType::min_edge: return "min";
    case EdgeType::max_edge: return "max";
    case EdgeType::infinity: return "infinity";
    case EdgeType::flat: return "flat";
    }
    return "?";
}

std::vector<PhaseComponent> component_graph(const OneDProfile& F, double tol_degenerate) {
    std::vector<PhaseComponent> out;
    auto add_rotations = [&](double e_a, EdgeType edge, double lo, std::vector<double> interior) {
        for (auto kind : {ComponentKind::rotation_upper, ComponentKind::rotation_lower}) {
            PhaseComponent c;
            c.id = static_cast<int>(out.size());
            c.kind = kind;
            c.e_a = e_a;
            c.edge_a = edge;
            c.edge_b = EdgeType::infinity;
            c.arc_lo = lo;
            c.arc_hi = lo + two_pi;
            c.interior = interior;
            out.push_back(c);
        }
    };
    if (F.is_zero()) {
        add_rotations(0.0, EdgeType::flat, 0.0, {});
        return out;
    }

    const auto cps = critical_points(F, tol_degenerate);
    for (const auto& cp : cps)
        if (cp.kind == CriticalKind::degenerate)
            throw std::domain_error("component_graph: degenerate critical point at xi = " + std::to_string(cp.xi));
    const int N = static_cast<int>(cps.size());
    if (N < 2 || N % 2 != 0) throw std::runtime_error("component_graph: critical points do not alternate");
    for (int i = 0; i < N; ++i)
        if (cps[i].kind == cps[(i + 1) % N].kind)
            throw std::runtime_error("component_graph: critical points do not alternate");

    std::vector<double> x(N), v(N);
    for (int i = 0; i < N; ++i) {
        x[i] = cps[i].xi;
        v[i] = F.eval(x[i]);
    }

    struct Well {
        int lo_idx, hi_idx;
        double lo_pos, hi_pos;
        std::vector<double> interior;
        int minima;
        double e_a;
        EdgeType edge_a;
    };
    std::vector<Well> wells;
    std::map<int, int> right_of, left_of; // max index -> well starting / ending there
    for (int i = 0; i < N; ++i) {
        if (cps[i].kind != CriticalKind::min) continue;
        const int lo = (i - 1 + N) % N, hi = (i + 1) % N;
        Well w{lo, hi, x[lo] - (lo > i ? two_pi : 0.0), x[hi] + (hi < i ? two_pi : 0.0), {x[i]}, 1, v[i],
               EdgeType::min_edge};
        right_of[lo] = static_cast<int>(wells.size());
        left_of[hi] = static_cast<int>(wells.size());
        wells.push_back(std::move(w));
    }

    auto close = [&](const Well& w, double e_b) {
        if (!(e_b > w.e_a)) return; // empty band between equal maxima
        PhaseComponent c;
        c.id = static_cast<int>(out.size());
        c.kind = ComponentKind::libration;
        c.e_a = w.e_a;
        c.e_b = e_b;
        c.edge_a = w.edge_a;
        c.edge_b = EdgeType::max_edge;
        c.arc_lo = w.lo_pos;
        c.arc_hi = w.hi_pos;
        c.interior = w.interior;
        c.minima = w.minima;
        out.push_back(std::move(c));
    };

    std::vector<int> maxima;
    for (int i = 0; i < N; ++i)
        if (cps[i].kind == CriticalKind::max) maxima.push_back(i);
    std::sort(maxima.begin(), maxima.end(), [&](int a, int b) { return v[a] != v[b] ? v[a] < v[b] : a < b; });

    for (int j : maxima) {
        const int L = left_of.at(j), R = right_of.at(j);
        if (L == R) {
            close(wells[L], v[j]);
            std::vector<double> interior;
            for (int i = 0; i < N; ++i)
                if (i != j) interior.push_back(x[i] < x[j] ? x[i] + two_pi : x[i]);
            std::sort(interior.begin(), interior.end());
            add_rotations(v[j], EdgeType::max_edge, x[j], std::move(interior));
            break;
        }
        close(wells[L], v[j]);
        close(wells[R], v[j]);
        const Well& l = wells[L];
        const Well& r = wells[R];
        const double shift = l.hi_pos - r.lo_pos;
        Well m{l.lo_idx, r.hi_idx, l.lo_pos, r.hi_pos + shift, l.interior, l.minima + r.minima, v[j],
               EdgeType::max_edge};
        m.interior.push_back(l.hi_pos);
        for (double p : r.interior) m.interior.push_back(p + shift);
        const int id = static_cast<int>(wells.size());
        right_of[m.lo_idx] = id;
        left_of[m.hi_idx] = id;
        wells.push_back(std::move(m));
    }
    return out;
}

double action_of_energy(const OneDProfile& F, const PhaseComponent& c, double E) {
    check_inside(c, E, true);
    if (c.kind == ComponentKind::libration && E == c.e_a && c.edge_a == EdgeType::min_edge) return 0.0;
    const Orbit o = build_orbit(F, c, E);
    return orbit_integral(F, o, Moment::action) / two_pi;
}

double period(const OneDProfile& F, const PhaseComponent& c, double E) {
    check_inside(c, E, false);
    return orbit_integral(F, build_orbit(F, c, E), Moment::period);
}

OrbitQuantities orbit_quantities(const OneDProfile& F, const PhaseComponent& c, double E) {
    check_inside(c, E, false);
    const Orbit o = build_orbit(F, c, E);
    OrbitQuantities q;
    q.E = E;
    q.p = orbit_integral(F, o, Moment::action) / two_pi;
    q.T = orbit_integral(F, o, Moment::period);
    q.dT = orbit_integral(F, o, Moment::period_derivative);
    q.omega = two_pi / q.T;
    q.E2 = -two_pi * two_pi * q.dT / (q.T * q.T * q.T);
    return q;
}

double second_derivative_fd(const OneDProfile& F, const PhaseComponent& c, double E, double h) {
    auto omega = [&](double e) { return two_pi / period(F, c, e); };
    auto central = [&](double step) { return (omega(E + step) - omega(E - step)) / (2.0 * step); };
    const double d = (4.0 * central(h / 2) - central(h)) / 3.0;
    return omega(E) * d;
}

ActionProfile::ActionProfile(PhaseComponent component, std::vector<ProfileSample> samples, double fd_disagreement)
    : comp_(std::move(component)), samples_(std::move(samples)), fd_disagreement_(fd_disagreement) {
    if (samples_.size() < 2) throw std::invalid_argument("ActionProfile: need at least two samples");
}

ActionProfile::Value ActionProfile::at(double p) const {
    if (!(p >= p_min() && p <= p_max())) throw std::out_of_range("ActionProfile::at: p outside the table");
    auto it = std::upper_bound(samples_.begin(), samples_.end(), p,
                               [](double v, const ProfileSample& s) { return v < s.p; });
    if (it == samples_.end()) --it;
    if (it == samples_.begin()) ++it;
    const auto& a = *(it - 1);
    const auto& b = *it;
    const double h = b.p - a.p, t = (p - a.p) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    Value v;
    v.E = h00 * a.E + h10 * h * a.omega + h01 * b.E + h11 * h * b.omega;
    v.omega = h00 * a.omega + h10 * h * a.E2 + h01 * b.omega + h11 * h * b.E2;
    v.E2 = (1 - t) * a.E2 + t * b.E2;
    return v;
}

ActionProfile energy_of_action(const OneDProfile& F, const PhaseComponent& c, const ProfileOptions& opt) {
    const double osc = oscillation(F);
    const double scale = osc > 0 ? osc : 1.0;
    const bool rotation = c.kind != ComponentKind::libration;
    const double top = rotation ? c.e_a + (opt.rotation_span > 0 ? opt.rotation_span : std::max(2.0, 4.0 * osc))
                                : c.e_b;
    const double width = top - c.e_a;

    std::vector<double> energies;
    for (int i = 1; i <= opt.uniform; ++i) energies.push_back(c.e_a + width * i / (opt.uniform + 1.0));
    const double half = rotation ? width : 0.5 * width;
    for (double g = 0.5 * half; g >= opt.min_gap * scale; g *= 0.5) {
        energies.push_back(c.e_a + g);
        if (!rotation) energies.push_back(c.e_b - g);
    }
    if (rotation) energies.push_back(top);
    std::sort(energies.begin(), energies.end());
    energies.erase(std::unique(energies.begin(), energies.end()), energies.end());

    std::vector<ProfileSample> samples;
    double worst = 0.0, e2_scale = 0.0;
    std::vector<std::pair<double, double>> pairs;
    for (double E : energies) {
        const auto q = orbit_quantities(F, c, E);
        const double gap = rotation ? E - c.e_a : std::min(E - c.e_a, c.e_b - E);
        ProfileSample s{E, q.p, q.omega, q.E2, std::nan(""), gap >= opt.theta};
        if (gap >= opt.fd_gap * scale) {
            s.E2_fd = second_derivative_fd(F, c, E, 0.002 * std::min(gap, scale));
            pairs.emplace_back(s.E2, s.E2_fd);
            e2_scale = std::max(e2_scale, std::abs(s.E2));
        }
        samples.push_back(s);
    }
    for (const auto& [a, b] : pairs)
        worst = std::max(worst, std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3 * e2_scale}));

    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].omega > 0)) throw std::runtime_error("energy_of_action: omega <= 0 at E = " +
                                                              std::to_string(samples[i].E));
        if (i > 0 && !(samples[i].p > samples[i - 1].p))
            throw std::runtime_error("energy_of_action: tabulated p(E) not increasing near E = " +
                                     std::to_string(samples[i].E));
    }
    return ActionProfile(c, std::move(samples), worst);
}

KolmogorovMargin kolmogorov_margin(const OneDProfile& F, const ActionProfile& profile, double theta, double c_exp) {
    if (!(theta > 0 && theta < 1)) throw std::invalid_argument("kolmogorov_margin: theta must lie in (0,1)");
    const auto& c = profile.component();
    KolmogorovMargin out;
    out.threshold = std::pow(theta, c_exp);
    const double thr = out.threshold;

    const auto& smp = profile.samples();
    double E_lo = std::max(smp.front().E, c.e_a + theta);
    double E_hi = c.kind == ComponentKind::libration ? std::min(smp.back().E, c.e_b - theta) : smp.back().E;
    if (!(E_hi > E_lo)) return out;

    std::vector<double> grid{E_lo};
    for (const auto& s : smp)
        if (s.E > E_lo && s.E < E_hi) grid.push_back(s.E);
    grid.push_back(E_hi);

    std::map<double, OrbitQuantities> cache;
    auto q = [&](double E) -> const OrbitQuantities& {
        auto it = cache.find(E);
        if (it == cache.end()) it = cache.emplace(E, orbit_quantities(F, c, E)).first;
        return it->second;
    };
    auto solve = [&](double a, double b, double level) {
        auto g = [&](double E) { return q(E).E2 - level; };
        std::uintmax_t iters = 100;
        auto tol = boost::math::tools::eps_tolerance<double>(40);
        auto r = boost::math::tools::toms748_solve(g, a, b, g(a), g(b), tol, iters);
        return 0.5 * (r.first + r.second);
    };

    std::function<void(double, double, int)> cell = [&](double a, double b, int depth) {
        const double ha = q(a).E2, hb = q(b).E2;
        const double m = 0.5 * (a + b);
        const double hm = q(m).E2;
        const double lo = std::min(ha, hb), hi = std::max(ha, hb);
        const double slack = 1e-9 * (std::abs(ha) + std::abs(hb));
        if (hm < lo - slack || hm > hi + slack) {
            if (depth > 14)
                throw std::runtime_error("kolmogorov_margin: cannot resolve E'' near E = " + std::to_string(m));
            cell(a, m, depth + 1);
            cell(m, b, depth + 1);
            return;
        }
        if (lo >= thr || hi <= -thr) return;
        std::vector<double> cuts{a, b};
        for (double level : {-thr, thr})
            if ((ha - level) * (hb - level) < 0) cuts.push_back(solve(a, b, level));
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
            if (std::abs(q(mid).E2) < thr) out.bad_measure += q(cuts[i + 1]).p - q(cuts[i]).p;
        }
    };
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) cell(grid[i], grid[i + 1], 0);
    out.valid_measure = q(E_hi).p - q(E_lo).p;
    out.pass = out.bad_measure <= theta;
    return out;
}

double critical_band_measure(const OneDProfile& F, double E0, double theta) {
    if (!(theta > 0)) throw std::invalid_argument("critical_band_measure: theta must be positive");
    auto fiber = [&](double xi) {
        const double f = F.eval(xi);
        return 2.0 * (std::sqrt(2.0 * std::max(0.0, E0 + theta - f)) - std::sqrt(2.0 * std::max(0.0, E0 - theta - f)));
    };
    std::vector<double> cuts{0.0, two_pi};
    if (!F.is_zero()) {
        const int cells = std::max(512, 64 * F.degree());
        for (double level : {E0 + theta, E0 - theta})
            for (double r : numerics::grid_roots([&](double x) { return F.eval(x) - level; }, 0.0, two_pi, cells, 0.0))
                cuts.push_back(r);
        for (const auto& cp : critical_points(F)) cuts.push_back(cp.xi);
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i + 1] > cuts[i]) total += integrate(fiber, cuts[i], cuts[i + 1]);
    return total;
}

double level_set_measure(const std::function<double(double)>& g, double x1, double x2, double theta, int cells) {
    if (!(x2 > x1)) throw std::invalid_argument("level_set_measure: need x1 < x2");
    if (!(theta >= 0)) throw std::invalid_argument("level_set_measure: theta must be nonnegative");
    const double h = (x2 - x1) / cells;
    int zero_run = 0;
    for (int i = 0; i <= cells; ++i) {
        zero_run = g(x1 + i * h) == 0.0 ? zero_run + 1 : 0;
        if (zero_run >= 3) throw std::invalid_argument("level_set_measure: g vanishes on a subinterval");
    }
    std::vector<double> cuts{x1, x2};
    for (double level : {theta, -theta})
        for (double r : numerics::grid_roots([&](double x) { return g(x) - level; }, x1, x2, cells, 0.0))
            cuts.push_back(r);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        if (std::abs(g(mid)) <= theta) total += cuts[i + 1] - cuts[i];
    }
    return total;
}

double min_edge_E2(const OneDProfile& F, double xi) {
    const double a = F.eval(xi, 2), b = F.eval(xi, 3), c = F.eval(xi, 4);
    return (3.0 * a * c - 5.0 * b * b) / (24.0 * a * a);
}

} // namespace kam
