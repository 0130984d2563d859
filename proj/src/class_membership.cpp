#include "kam/class_membership.hpp"

#include "kam/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <numbers>
#include <stdexcept>

namespace kam {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double wrap(double xi) {
    double r = std::fmod(xi, two_pi);
    if (r < 0) r += two_pi;
    if (r >= two_pi) r = 0.0;
    return r;
}

double circle_distance(double a, double b) {
    const double d = std::abs(wrap(a) - wrap(b));
    return std::min(d, two_pi - d);
}

// Number of star vectors with |k| = m, from the Moebius inversion of the full count.
std::uint64_t star_count(int n, int m) {
    auto mobius = [](int d) {
        int result = 1;
        for (int p = 2; p * p <= d; ++p) {
            if (d % p == 0) {
                d /= p;
                if (d % p == 0) return 0;
                result = -result;
            }
        }
        if (d > 1) result = -result;
        return result;
    };
    std::int64_t total = 0;
    for (int d = 1; d <= m; ++d)
        if (m % d == 0) total += mobius(d) * static_cast<std::int64_t>(count_vectors_l1(n, m / d));
    return static_cast<std::uint64_t>(total / 2);
}

double p1_threshold(const WaveVector& k, double delta, int n, double s) {
    return delta * std::pow(k.l1(), -0.5 * (n + 3)) * std::exp(-k.l1() * s);
}

// grid offset that keeps common critical points (0, pi/2, pi) away from the cell boundaries
constexpr double grid_offset = 0.1234567;

std::vector<double> roots_of_derivative(const OneDProfile& F, int cells, double touch_tol) {
    auto f1 = [&F](double xi) { return F.eval(xi, 1); };
    auto raw = numerics::grid_roots(f1, grid_offset, grid_offset + two_pi, cells, touch_tol);
    std::vector<double> out;
    for (double r : raw) {
        const double w = wrap(r);
        bool dup = false;
        for (double o : out) dup = dup || circle_distance(o, w) < 1e-9;
        if (!dup) out.push_back(w);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

double default_c_K(int n) { return 2.0 * n; }

double resolved_c_K(const ClassConfig& cfg, int n) { return cfg.c_K > 0 ? cfg.c_K : default_c_K(n); }

double cutoff_K(double delta, double s, double c_K) {
    if (!(s > 0)) throw std::invalid_argument("cutoff_K: s must be > 0");
    if (!(delta > 0)) throw std::invalid_argument("cutoff_K: delta must be > 0");
    if (!(delta < c_K)) throw std::invalid_argument("cutoff_K: delta must be < c_K (logarithm would be <= 0)");
    return 2.0 / s * std::log(c_K / delta);
}

const char* to_string(CriticalKind k) {
    switch (k) {
    case CriticalKind::min: return "min";
    case CriticalKind::max: return "max";
    case CriticalKind::degenerate: return "degenerate";
    }
    return "?";
}

P1Result check_P1(const FourierPotential& f, double delta, double c_K) {
    P1Result r;
    const int n = f.dim();
    const double s = f.width();
    const double K = cutoff_K(delta, s, c_K);
    const int first = static_cast<int>(std::floor(K)) + 1;

    for (const auto& [k, c] : f.modes()) {
        if (!k.is_star() || k.l1() <= K) continue;
        if (f.k_max() && k.l1() > *f.k_max()) continue;
        const double thr = p1_threshold(k, delta, n, s);
        if (std::abs(c) < thr) {
            r.pass = false;
            r.violations.push_back({k, std::abs(c), thr, false});
        }
    }

    auto stored_star_at = [&f](int m) {
        std::uint64_t cnt = 0;
        for (const auto& [k, c] : f.modes())
            if (k.l1() == m && k.is_star()) ++cnt;
        return cnt;
    };
    auto first_unlisted_at = [&f, n](int m) -> std::optional<WaveVector> {
        for (auto& k : star_vectors(n, m, m))
            if (!f.is_stored(k)) return k;
        return std::nullopt;
    };

    const bool floor_tail = f.tail().kind == Tail::Kind::floor && f.tail().delta0 > 0;
    if (f.k_max() && *f.k_max() <= K) r.note = "k_max <= K_s(delta): no sampled mode above the cutoff";
    if (!floor_tail) {
        // unlisted star modes are zero; sampled potentials are only quoted up to k_max
        const int last = f.k_max() ? *f.k_max() : std::numeric_limits<int>::max();
        for (int m = first; m <= last; ++m) {
            if (stored_star_at(m) < star_count(n, m)) {
                auto k = first_unlisted_at(m);
                r.pass = false;
                r.violations.push_back({*k, 0.0, p1_threshold(*k, delta, n, s), true});
                if (!f.k_max()) r.note = "zero tail: finite trigonometric polynomials violate (P1)";
                break;
            }
        }
        return r;
    }

    // Floor(delta0): an unlisted mode at |k| = m fails iff delta0 < delta m^{-(n+3)/2}, which is
    // monotone in m, so only m below (delta/delta0)^{2/(n+3)} can fail.
    const double delta0 = f.tail().delta0;
    const int last = f.k_max() ? *f.k_max() : std::numeric_limits<int>::max();
    for (int m = first; m <= last; ++m) {
        if (!(delta0 < delta * std::pow(m, -0.5 * (n + 3)))) break;
        if (stored_star_at(m) < star_count(n, m)) {
            auto k = first_unlisted_at(m);
            r.pass = false;
            r.violations.push_back({*k, delta0 * std::exp(-m * s), p1_threshold(*k, delta, n, s), true});
        }
    }
    return r;
}

MorseBeta morse_beta(const OneDProfile& F) {
    MorseBeta out;
    if (F.is_zero()) {
        out.empty_profile = true;
        return out;
    }
    if (F.degree() == 1) {
        // A cos(xi + phi): |F'| + |F''| = A(|sin| + |cos|), minimal where xi + phi = 0 mod pi/2
        const Complex c = F.coefficient(1);
        out.beta = out.lower_bound = 2.0 * std::abs(c);
        out.argmin = wrap(-std::arg(c));
        return out;
    }
    auto g = [&F](double xi) {
        const auto [d1, d2] = F.slope_curvature(xi);
        return std::abs(d1) + std::abs(d2);
    };
    const int cells = std::clamp(64 * F.degree(), 2048, 65536);
    const double h = two_pi / cells;
    std::vector<double> v(cells);
    for (int i = 0; i < cells; ++i) v[i] = g(grid_offset + i * h);
    const double grid_min = *std::min_element(v.begin(), v.end());

    std::vector<int> local;
    for (int i = 0; i < cells; ++i) {
        const double l = v[(i + cells - 1) % cells], r = v[(i + 1) % cells];
        if (v[i] <= l && v[i] <= r) local.push_back(i);
    }
    std::sort(local.begin(), local.end(), [&v](int a, int b) { return v[a] < v[b]; });
    if (local.size() > 32) local.resize(32);

    out.beta = grid_min;
    out.argmin = wrap(grid_offset + (std::min_element(v.begin(), v.end()) - v.begin()) * h);
    for (int i : local) {
        const double c = grid_offset + i * h;
        auto m = numerics::golden_minimum(g, c - h, c + h);
        if (m.value < out.beta) {
            out.beta = m.value;
            out.argmin = wrap(m.x);
        }
    }
    const double lipschitz = F.derivative_bound(2) + F.derivative_bound(3);
    out.lower_bound = std::max(0.0, grid_min - 0.5 * lipschitz * h);
    return out;
}

std::vector<CriticalPoint> critical_points(const OneDProfile& F, double tol_degenerate) {
    if (F.is_zero()) return {};
    const double scale1 = F.derivative_bound(1);
    const double scale2 = F.derivative_bound(2);
    const double touch_tol = 1e-11 * scale1;
    const int cells = std::max(256, 32 * F.degree());
    auto coarse = roots_of_derivative(F, cells, touch_tol);
    auto fine = roots_of_derivative(F, 2 * cells, touch_tol);
    if (coarse.size() != fine.size())
        throw std::runtime_error("critical_points: root count differs between grid resolutions (" +
                                 std::to_string(coarse.size()) + " vs " + std::to_string(fine.size()) +
                                 "); profile under-resolved");

    const double h = two_pi / (2 * cells);
    std::vector<CriticalPoint> out;
    for (double xi : fine) {
        double f2 = F.eval(xi, 2);
        if (std::abs(f2) < 1e-6 * scale2) {
            // near-degenerate: polish on |F'| + |F''| instead of F' alone
            auto g = [&F](double t) { return std::abs(F.eval(t, 1)) + std::abs(F.eval(t, 2)); };
            auto m = numerics::golden_minimum(g, xi - h, xi + h);
            xi = wrap(m.x);
            f2 = F.eval(xi, 2);
        }
        CriticalKind kind = CriticalKind::degenerate;
        if (std::abs(f2) > tol_degenerate * scale2) kind = f2 > 0 ? CriticalKind::min : CriticalKind::max;
        out.push_back({xi, kind, f2});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.xi < b.xi; });
    return out;
}

double p2_scale(const OneDProfile& F) { return F.derivative_bound(1) + F.derivative_bound(2); }

double p3_scale(const OneDProfile& F) {
    const double m3 = F.derivative_bound(3);
    return 3.0 * F.derivative_bound(2) * F.derivative_bound(4) + 5.0 * m3 * m3;
}

P3Result check_P3(const OneDProfile& F, double tol_margin, double tol_degenerate) {
    P3Result r;
    for (const auto& cp : critical_points(F, tol_degenerate)) {
        if (cp.kind == CriticalKind::degenerate)
            throw std::domain_error("check_P3: degenerate critical point at xi = " + std::to_string(cp.xi) +
                                    " (check P2 first)");
        if (cp.kind != CriticalKind::min) continue;
        const double f2 = F.eval(cp.xi, 2), f3 = F.eval(cp.xi, 3), f4 = F.eval(cp.xi, 4);
        const double m = std::abs(3.0 * f2 * f4 - 5.0 * f3 * f3);
        r.margins.push_back({cp.xi, m});
        if (!(m > tol_margin * p3_scale(F))) r.pass = false;
    }
    return r;
}

int ClassReport::failure_count() const {
    int n = static_cast<int>(p1.violations.size());
    if (!p1.pass && p1.violations.empty()) ++n;
    for (const auto& m : modes) {
        if (!m.p2_pass) ++n;
        else if (!m.p3.pass || !m.error.empty()) ++n;
    }
    return n;
}

ClassReport check_class(const FourierPotential& f, double delta, const ClassConfig& cfg) {
    ClassReport r;
    r.delta = delta;
    r.c_K = resolved_c_K(cfg, f.dim());
    r.K_cut = cutoff_K(delta, f.width(), r.c_K);
    r.tol_beta = cfg.tol_beta;
    r.tol_margin = cfg.tol_margin;
    r.norm = norm_s(f);
    r.p1 = check_P1(f, delta, r.c_K);

    int low = static_cast<int>(std::floor(r.K_cut));
    if (f.k_max() && *f.k_max() < low) {
        low = *f.k_max();
        r.note = "low modes quoted only up to the sampled k_max = " + std::to_string(*f.k_max());
    }
    if (count_sharp_upto(f.dim(), low) > cfg.max_modes)
        throw std::runtime_error("check_class: too many low modes below K_s(delta) = " + std::to_string(r.K_cut));

    r.p2_pass = true;
    r.p3_pass = true;
    for (auto& k : star_vectors(f.dim(), low)) {
        ModeReport m;
        m.k = k;
        const OneDProfile F = profile_of(f, k);
        m.beta = morse_beta(F);
        m.p2_pass = !m.beta.empty_profile && m.beta.beta > cfg.tol_beta * p2_scale(F);
        try {
            m.critical = critical_points(F, cfg.tol_degenerate);
        } catch (const std::exception& e) {
            m.error = e.what();
            m.p2_pass = false;
        }
        if (m.p2_pass) {
            m.p3_checked = true;
            try {
                m.p3 = check_P3(F, cfg.tol_margin, cfg.tol_degenerate);
            } catch (const std::exception& e) {
                m.error = e.what();
                m.p3.pass = false;
            }
        }
        r.p2_pass = r.p2_pass && m.p2_pass;
        r.p3_pass = r.p3_pass && m.p2_pass && m.p3.pass;
        r.modes.push_back(std::move(m));
    }
    r.verdict = r.p1.pass && r.p2_pass && r.p3_pass;
    return r;
}

ClassReport classify(const FourierPotential& f, std::span<const double> delta_grid, const ClassConfig& cfg) {
    if (delta_grid.empty()) throw std::invalid_argument("classify: empty delta grid");
    std::vector<double> grid(delta_grid.begin(), delta_grid.end());
    std::sort(grid.begin(), grid.end(), std::greater<>());
    std::optional<ClassReport> nearest;
    for (double delta : grid) {
        if (!(delta > 0 && delta < 1)) throw std::invalid_argument("classify: delta values must lie in (0,1)");
        ClassReport r = check_class(f, delta, cfg);
        if (r.verdict) return r;
        if (!nearest || r.failure_count() < nearest->failure_count()) nearest = std::move(r);
    }
    return *nearest;
}

nlohmann::json report_to_json(const ClassReport& r) {
    using nlohmann::json;
    json j;
    j["delta"] = r.delta;
    j["K_cut"] = r.K_cut;
    j["c_K"] = r.c_K;
    j["tol_beta"] = r.tol_beta;
    j["tol_margin"] = r.tol_margin;
    j["norm_s"] = r.norm;
    j["verdict"] = r.verdict ? "pass" : "fail";
    if (!r.note.empty()) j["note"] = r.note;
    json p1;
    p1["pass"] = r.p1.pass;
    if (!r.p1.note.empty()) p1["note"] = r.p1.note;
    p1["violations"] = json::array();
    for (const auto& v : r.p1.violations)
        p1["violations"].push_back(
            {{"k", v.k.str()}, {"amplitude", v.amplitude}, {"threshold", v.threshold}, {"from_tail", v.from_tail}});
    j["p1"] = p1;
    j["p2_pass"] = r.p2_pass;
    j["p3_pass"] = r.p3_pass;
    json modes = json::array();
    for (const auto& m : r.modes) {
        json jm;
        jm["k"] = m.k.str();
        jm["beta"] = m.beta.beta;
        jm["beta_lower_bound"] = m.beta.lower_bound;
        jm["beta_argmin"] = m.beta.argmin;
        jm["empty_profile"] = m.beta.empty_profile;
        jm["p2_pass"] = m.p2_pass;
        jm["critical_points"] = json::array();
        for (const auto& c : m.critical)
            jm["critical_points"].push_back({{"xi", c.xi}, {"kind", to_string(c.kind)}, {"f2", c.f2}});
        if (m.p3_checked) {
            jm["p3_pass"] = m.p3.pass;
            jm["p3_margins"] = json::array();
            for (const auto& pm : m.p3.margins) jm["p3_margins"].push_back({{"xi", pm.xi}, {"margin", pm.margin}});
        }
        if (!m.error.empty()) jm["error"] = m.error;
        modes.push_back(std::move(jm));
    }
    j["modes"] = std::move(modes);
    return j;
}

Complex critical_curve_P2(const OneDProfile& G, double xi0) {
    if (G.coefficient(1) != Complex(0.0))
        throw std::invalid_argument("critical_curve_P2: G must not contain the j = 1 term");
    const Complex e(std::cos(xi0), -std::sin(xi0));
    return 0.5 * e * Complex(G.eval(xi0, 2), G.eval(xi0, 1));
}

std::vector<P3CurvePoint> critical_curve_P3(const OneDProfile& G, double xi) {
    if (G.coefficient(1) != Complex(0.0))
        throw std::invalid_argument("critical_curve_P3: G must not contain the j = 1 term");
    const double g1 = G.eval(xi, 1), g2 = G.eval(xi, 2), g3 = G.eval(xi, 3), g4 = G.eval(xi, 4);
    const double b = 0.5 * (g4 - g2);
    const double c = -g2 * g4 + 5.0 * (g1 + g3) * (g1 + g3) / 3.0;
    const double disc = b * b - c;
    if (disc < 0) return {};
    const double root = std::sqrt(disc);
    const Complex e(std::cos(xi), -std::sin(xi));
    std::vector<P3CurvePoint> out;
    for (double x : {-b + root, -b - root}) {
        // with 2 Re(zeta e^{i xi}) = x the resulting F'' at xi is g2 - x
        out.push_back({0.5 * e * Complex(x, g1), g2 - x > 0});
    }
    return out;
}

namespace {

bool low_mode_ok(const OneDProfile& F, const ClassConfig& cfg, double safety) {
    if (F.is_zero()) return false;
    if (!(morse_beta(F).beta > safety * cfg.tol_beta * p2_scale(F))) return false;
    try {
        auto p3 = check_P3(F, safety * cfg.tol_margin, cfg.tol_degenerate);
        return p3.pass;
    } catch (const std::exception&) {
        return false;
    }
}

// Points of both critical curves of G, sampled densely over the circle.
std::vector<Complex> curve_samples(const OneDProfile& G) {
    std::vector<Complex> pts;
    constexpr int samples = 1440;
    for (int i = 0; i < samples; ++i) {
        const double xi = two_pi * i / samples;
        pts.push_back(critical_curve_P2(G, xi));
        for (const auto& p : critical_curve_P3(G, xi)) pts.push_back(p.zeta);
    }
    return pts;
}

// Unit direction pointing away from the nearest sampled curve point.
Complex exit_direction(Complex z, const std::vector<Complex>& pts) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (std::abs(pts[i] - z) < std::abs(pts[best] - z)) best = i;
    const Complex d = z - pts[best];
    if (std::abs(d) > 1e-14) return d / std::abs(d);
    // on the curve: perpendicular to the local chord
    const Complex next = pts[(best + 1) % pts.size()], prev = pts[(best + pts.size() - 1) % pts.size()];
    const Complex t = next - prev;
    if (std::abs(t) > 1e-14) return Complex(0, 1) * t / std::abs(t);
    return std::abs(z) > 1e-14 ? z / std::abs(z) : Complex(1, 0);
}

} // namespace

RepairResult repair_to_Ps_prime(const FourierPotential& f, double theta, const ClassConfig& cfg) {
    if (!(theta > 0 && theta < 1)) throw std::invalid_argument("repair_to_Ps_prime: theta must lie in (0,1)");
    const int n = f.dim();
    const double s = f.width();
    const double delta = theta / 4.0;
    const double c_K = resolved_c_K(cfg, n);
    const double K = cutoff_K(delta, s, c_K);

    RepairResult out{f.without_k_max(), delta, K, {}};
    FourierPotential& g = out.potential;

    // tail: every unlisted star mode gets at least delta e^{-|k|s}
    if (f.tail().kind == Tail::Kind::zero || f.tail().delta0 < delta) g = g.with_tail(Tail::floor(delta));

    for (const auto& [k, c] : f.modes()) {
        if (!k.is_star() || k.l1() <= K) continue;
        const double scale = std::exp(-k.l1() * s);
        if (std::abs(c) / scale < delta) {
            const Complex lifted = delta * scale;
            g = g.with_mode(k, lifted);
            out.changes.push_back({k, c, lifted, "P1'"});
        }
    }

    const int low = static_cast<int>(std::floor(K));
    if (count_sharp_upto(n, low) > cfg.max_modes)
        throw std::runtime_error("repair_to_Ps_prime: too many low modes below K_s(delta)");
    constexpr double safety = 1e3;
    for (const auto& k : star_vectors(n, low)) {
        const OneDProfile F = profile_of(g, k);
        if (low_mode_ok(F, cfg, safety)) continue;
        const Complex original = f.coefficient(k);
        const double budget = theta * std::exp(-k.l1() * s);
        const OneDProfile G = F.without_fundamental();
        const auto pts = curve_samples(G);
        const Complex dir = exit_direction(original, pts);

        std::optional<Complex> chosen;
        for (double frac : {0.9, 0.6, 0.3, 0.15}) {
            for (int turn = 0; turn < 16 && !chosen; ++turn) {
                // perpendicular first, then its reverse, then a fan of other directions
                const double angle = turn == 0 ? 0.0 : turn == 1 ? std::numbers::pi : two_pi * (turn - 1) / 15.0 + 0.1;
                const Complex cand = original + frac * budget * dir * std::polar(1.0, angle);
                if (low_mode_ok(F.with_fundamental(cand), cfg, safety)) chosen = cand;
            }
            if (chosen) break;
        }
        if (!chosen)
            throw std::runtime_error("repair_to_Ps_prime: cannot move mode " + k.str() +
                                     " off the critical curves within theta e^{-|k|s}");
        g = g.with_mode(k, *chosen);
        out.changes.push_back({k, original, *chosen, "P2/P3"});
    }
    return out;
}

} // namespace kam
