#include "artifacts.hpp"

#include "kam/class_membership.hpp"
#include "kam/one_dof.hpp"
#include "kam/potential_io.hpp"
#include "kam/random_potentials.hpp"
#include "kam/resonance_geometry.hpp"
#include "kam/survey.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef KAM_VERSION
#define KAM_VERSION "0.0.0"
#endif

using namespace kam;
using namespace kamtool;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_quality = 3;

struct Globals {
    std::string out;
    unsigned threads = 0;
};

fs::path out_dir(const Globals& g) {
    fs::path p = g.out;
    fs::create_directories(p);
    return p;
}

std::string default_out() {
    if (const char* e = std::getenv("KAMTOOL_OUT"); e && *e) return e;
    return "kamtool_out";
}

WaveVector parse_mode(const std::string& text) {
    std::vector<int> c;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        std::size_t used = 0;
        const int v = std::stoi(part, &used);
        if (used != part.size()) throw std::invalid_argument("bad mode component '" + part + "'");
        c.push_back(v);
    }
    if (c.empty()) throw std::invalid_argument("empty mode");
    return WaveVector(std::move(c));
}

/// "j:a:b,..." = sum a cos(j xi) + b sin(j xi).
OneDProfile parse_terms(const std::string& text) {
    std::vector<OneDProfile::Term> terms;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::stringstream is(item);
        std::string j, a, b = "0";
        if (!std::getline(is, j, ':') || !std::getline(is, a, ':'))
            throw std::invalid_argument("profile term '" + item + "' is not j:cos[:sin]");
        std::getline(is, b, ':');
        terms.push_back({std::stoi(j), std::stod(a), std::stod(b)});
    }
    if (terms.empty()) throw std::invalid_argument("empty --terms");
    return OneDProfile::from_terms(terms);
}

struct ProfileSource {
    std::string potential;
    std::string mode;
    std::string terms;
    bool pendulum = false;

    void add(CLI::App* c) {
        c->add_option("--profile-of", potential, "Potential file whose projection is used");
        c->add_option("--mode", mode, "Star mode k of the projection, e.g. 1,1");
        c->add_option("--terms", terms, "Explicit profile j:cos:sin,... (instead of --profile-of)");
        c->add_flag("--pendulum", pendulum, "Use F = cos xi");
    }

    OneDProfile resolve() const {
        const int given = !potential.empty() + !terms.empty() + pendulum;
        if (given != 1) throw std::invalid_argument("give exactly one of --profile-of, --terms, --pendulum");
        if (pendulum) return OneDProfile::from_terms({{1, 1.0, 0.0}});
        if (!terms.empty()) return parse_terms(terms);
        if (mode.empty()) throw std::invalid_argument("--profile-of needs --mode");
        const WaveVector k = parse_mode(mode);
        if (!k.is_star()) throw std::invalid_argument("--mode must be a star vector (sharp, gcd 1)");
        const auto f = load_potential(potential);
        if (k.dim() != f.dim()) throw std::invalid_argument("--mode has the wrong dimension");
        return profile_of(f, k);
    }
};

std::pair<double, double> parse_box(const std::vector<double>& b) {
    if (b.size() != 2 || !(b[0] < b[1])) throw std::invalid_argument("--box needs lo,hi with lo < hi");
    return {b[0], b[1]};
}

// ---------------------------------------------------------------------------
// potential

struct SampleArgs {
    std::string measure = "mu_s";
    int n = 2;
    double s = 1.0;
    int k_max = 0;
    std::uint64_t seed = 1;
    std::uint64_t draw = 0;
    std::string file = "potential.json";
};

int run_potential_sample(const Globals& g, const SampleArgs& a, json& resolved) {
    MeasureSpec spec{measure_kind_from_string(a.measure), a.n, a.s, a.k_max, a.seed};
    resolved["K_max"] = resolved_K_max(spec);
    const auto f = sample(spec, a.draw);
    save_potential(f, (out_dir(g) / a.file).string());
    std::cout << "sampled " << f.modes().size() << " modes, |f|_s = " << norm_s(f) << "\n";
    return exit_ok;
}

int run_potential_show(const Globals& g, const std::string& path) {
    const auto f = load_potential(path);
    json j;
    j["n"] = f.dim();
    j["s"] = f.width();
    j["stored_modes"] = f.modes().size();
    j["norm_s"] = norm_s(f);
    j["tail"] = f.tail().kind == Tail::Kind::floor ? "floor" : "zero";
    j["delta0"] = f.tail().delta0;
    if (f.k_max()) j["k_max"] = *f.k_max();
    write_json(out_dir(g) / "potential_summary.json", j);
    std::cout << j.dump(2) << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------
// class

struct ClassArgs {
    std::string potential;
    std::vector<double> delta_grid{0.2, 0.1, 0.05};
    double theta = 0.1;
    double c_K = 0.0;
    double tol_beta = 1e-10;
    double tol_margin = 1e-10;
    double tol_degenerate = 1e-8;

    ClassConfig config() const {
        ClassConfig c;
        c.c_K = c_K;
        c.tol_beta = tol_beta;
        c.tol_margin = tol_margin;
        c.tol_degenerate = tol_degenerate;
        return c;
    }
};

void write_mode_table(const fs::path& path, const ClassReport& r) {
    Csv csv(path, {"k", "l1", "beta", "beta_lower_bound", "p2_pass", "critical_points", "p3_checked", "p3_pass",
                   "min_p3_margin", "error"});
    for (const auto& m : r.modes) {
        double margin = INFINITY;
        for (const auto& p : m.p3.margins) margin = std::min(margin, p.margin);
        csv.row(m.k.str(), m.k.l1(), m.beta.beta, m.beta.lower_bound, int(m.p2_pass), m.critical.size(),
                int(m.p3_checked), int(m.p3.pass), m.p3.margins.empty() ? std::nan("") : margin, m.error);
    }
}

int run_class_check(const Globals& g, const ClassArgs& a, json& resolved) {
    const auto f = load_potential(a.potential);
    const auto cfg = a.config();
    resolved["c_K"] = resolved_c_K(cfg, f.dim());
    const auto r = classify(f, a.delta_grid, cfg);
    const auto dir = out_dir(g);
    write_json(dir / "class_report.json", report_to_json(r));
    write_mode_table(dir / "class_modes.csv", r);
    std::cout << "verdict " << (r.verdict ? "in class" : "not in class") << " at delta = " << r.delta << "\n";
    return exit_ok;
}

int run_class_repair(const Globals& g, const ClassArgs& a, json& resolved) {
    const auto f = load_potential(a.potential);
    const auto cfg = a.config();
    resolved["c_K"] = resolved_c_K(cfg, f.dim());
    const auto rep = repair_to_Ps_prime(f, a.theta, cfg);
    resolved["delta"] = rep.delta;
    const auto dir = out_dir(g);
    save_potential(rep.potential, (dir / "repaired.json").string());
    Csv csv(dir / "repair_changes.csv", {"k", "before_re", "before_im", "after_re", "after_im", "reason"});
    for (const auto& c : rep.changes)
        csv.row(c.k.str(), c.before.real(), c.before.imag(), c.after.real(), c.after.imag(), c.reason);
    const auto check = check_class(rep.potential, rep.delta, cfg);
    write_json(dir / "class_report.json", report_to_json(check));
    write_mode_table(dir / "class_modes.csv", check);
    std::cout << rep.changes.size() << " coefficients changed; repaired potential "
              << (check.verdict ? "passes" : "FAILS") << " at delta = " << rep.delta << "\n";
    if (!check.verdict) throw QualityFailure("repaired potential does not pass the class check");
    return exit_ok;
}

// ---------------------------------------------------------------------------
// zones

struct ZonesArgs {
    double eps = 1e-3;
    int n = 2;
    std::vector<double> box{0.6, 1.4};
    double width_exponent = -1.0;
    double cutoff_exponent = 2.0;
    std::size_t samples = 20000;
    std::uint64_t seed = 1;
};

int run_zones(const Globals& g, const ZonesArgs& a, json& resolved) {
    const auto [lo, hi] = parse_box(a.box);
    ZoneConfig zc;
    if (a.width_exponent >= 0) zc.width_exponent = a.width_exponent;
    zc.mode_cutoff_exponent = a.cutoff_exponent;
    resolved["width_exponent"] = zc.width_exponent.value_or(default_width_exponent(a.n));
    const auto zones = make_zones(a.eps, a.n, zc);
    resolved["width"] = zones.width;
    const auto B = ActionRegion::cube(a.n, lo, hi);
    const auto m = zone_measures(zones, B, a.samples, a.seed, g.threads);
    const auto dir = out_dir(g);
    Csv modes(dir / "zone_modes.csv", {"k", "l1"});
    for (const auto& k : zones.modes) modes.row(k.str(), k.l1());
    Csv meas(dir / "zone_measures.csv", {"zone", "count", "fraction", "ci_lo", "ci_hi"});
    for (int z = 0; z < 3; ++z)
        meas.row(to_string(static_cast<Zone>(z)), m.count[z], m.fraction[z], m.interval[z].lo, m.interval[z].hi);
    std::cout << zones.modes.size() << " resonant modes, width " << zones.width << "; B0/B1/B2 = " << m.fraction[0]
              << " / " << m.fraction[1] << " / " << m.fraction[2] << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------
// aa

struct AaArgs {
    ProfileSource source;
    int uniform = 24;
    double min_gap = 1e-9;
    double theta = 0.0;
    double rotation_span = 0.0;
    double fd_tol = 1e-4;
};

int run_aa(const Globals& g, const AaArgs& a) {
    const auto F = a.source.resolve();
    const auto comps = component_graph(F);
    const auto dir = out_dir(g);
    Csv cc(dir / "aa_components.csv", {"component", "kind", "e_a", "e_b", "edge_a", "edge_b", "minima"});
    Csv pc(dir / "aa_profile.csv", {"component", "kind", "E", "p", "omega", "E2", "E2_fd", "valid"});
    ProfileOptions opt;
    opt.uniform = a.uniform;
    opt.min_gap = a.min_gap;
    opt.theta = a.theta;
    opt.rotation_span = a.rotation_span;
    std::vector<Series> plot;
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    double worst = 0.0;
    for (const auto& c : comps) {
        cc.row(c.id, to_string(c.kind), c.e_a, c.e_b, to_string(c.edge_a), to_string(c.edge_b), c.minima);
        const auto prof = energy_of_action(F, c, opt);
        worst = std::max(worst, prof.fd_disagreement());
        Series s{std::string(to_string(c.kind)) + " " + std::to_string(c.id), colors[c.id % 6], {}, {}, false};
        for (const auto& p : prof.samples()) {
            pc.row(c.id, to_string(c.kind), p.E, p.p, p.omega, p.E2, p.E2_fd, int(p.valid));
            s.x.push_back(p.p);
            s.y.push_back(p.E);
        }
        plot.push_back(std::move(s));
    }
    write_svg(dir / "aa.svg", {"E(p) per component", "action p", "energy E"}, plot);
    std::cout << comps.size() << " components; largest relative E'' disagreement " << worst << "\n";
    if (worst > a.fd_tol)
        throw QualityFailure("E'' quadrature and finite differences disagree by " + std::to_string(worst));
    return exit_ok;
}

// ---------------------------------------------------------------------------
// lemmas

struct BandArgs {
    ProfileSource source;
    double E0 = NAN;
    std::vector<double> thetas{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
};

int run_lemma_band(const Globals& g, const BandArgs& a, json& resolved) {
    const auto F = a.source.resolve();
    double E0 = a.E0;
    if (std::isnan(E0)) {
        // highest critical level: the outer separatrix
        E0 = -INFINITY;
        for (const auto& c : critical_points(F)) E0 = std::max(E0, F.eval(c.xi));
        if (!std::isfinite(E0)) E0 = 0.0;
    }
    resolved["E0"] = E0;
    Csv csv(out_dir(g) / "lemma_band.csv", {"theta", "measure", "ratio_theta_log_theta"});
    for (double t : a.thetas) {
        const double m = critical_band_measure(F, E0, t);
        csv.row(t, m, m / (t * std::abs(std::log(t))));
    }
    return exit_ok;
}

struct KolmogorovArgs {
    ProfileSource source;
    double theta = 0.1;
    double c_exp = 1.0;
};

int run_lemma_kolmogorov(const Globals& g, const KolmogorovArgs& a) {
    const auto F = a.source.resolve();
    Csv csv(out_dir(g) / "lemma_kolmogorov.csv",
            {"component", "kind", "bad_measure", "valid_measure", "threshold", "pass"});
    ProfileOptions opt;
    opt.theta = a.theta;
    bool all = true;
    for (const auto& c : component_graph(F)) {
        const auto prof = energy_of_action(F, c, opt);
        const auto m = kolmogorov_margin(F, prof, a.theta, a.c_exp);
        csv.row(c.id, to_string(c.kind), m.bad_measure, m.valid_measure, m.threshold, int(m.pass));
        all = all && m.pass;
    }
    std::cout << "Kolmogorov margin " << (all ? "holds" : "fails") << " on every component\n";
    return exit_ok;
}

struct LevelSetArgs {
    int power = 2;
    std::vector<double> thetas{1e-2, 1e-4};
    int cells = 4096;
};

int run_lemma_level_set(const Globals& g, const LevelSetArgs& a) {
    if (a.power < 1) throw std::invalid_argument("--power must be >= 1");
    Csv csv(out_dir(g) / "lemma_level_set.csv", {"power", "theta", "measure", "closed_form"});
    const int m = a.power;
    for (double t : a.thetas) {
        const double meas = level_set_measure([m](double x) { return std::pow(x, m); }, -1.0, 1.0, t, a.cells);
        csv.row(m, t, meas, 2 * std::pow(t, 1.0 / m));
    }
    return exit_ok;
}

struct P1Args {
    int n = 2;
    double s = 1.0;
    int k_max = 0;
    std::uint64_t seed = 1;
    double delta = 0.1;
    std::size_t draws = 10000;
    double c_K = 0.0;
};

int run_lemma_p1(const Globals& g, const P1Args& a, json& resolved) {
    MeasureSpec spec{MeasureKind::mu_s, a.n, a.s, a.k_max, a.seed};
    ClassConfig cfg;
    cfg.c_K = a.c_K;
    resolved["K_max"] = resolved_K_max(spec);
    resolved["c_K"] = resolved_c_K(cfg, a.n);
    const auto r = p1_failure_probability(a.delta, spec, a.draws, cfg, g.threads);
    json j{{"delta", r.delta},       {"K_cut", r.K_cut},         {"draws", r.draws},
           {"failures", r.failures}, {"fraction", r.fraction},   {"sigma", r.sigma},
           {"ci_lo", r.interval.lo}, {"ci_hi", r.interval.hi},   {"testable_modes", r.testable_modes},
           {"union_sum", r.union_sum}, {"exact", r.exact},       {"c_n", r.c_n}};
    write_json(out_dir(g) / "lemma_p1.json", j);
    std::cout << "P1 failures " << r.failures << " / " << r.draws << "; union bound " << r.union_sum << "\n";
    return exit_ok;
}

struct ClassProbArgs {
    int n = 2;
    double s = 1.0;
    int k_max = 0;
    std::uint64_t seed = 1;
    std::string measure = "mu_s";
    std::vector<double> deltas{0.2, 0.1, 0.05};
    std::size_t draws = 1000;
    double c_K = 0.0;
};

int run_lemma_class_prob(const Globals& g, const ClassProbArgs& a, json& resolved) {
    MeasureSpec spec{measure_kind_from_string(a.measure), a.n, a.s, a.k_max, a.seed};
    ClassConfig cfg;
    cfg.c_K = a.c_K;
    resolved["K_max"] = resolved_K_max(spec);
    resolved["c_K"] = resolved_c_K(cfg, a.n);
    Csv csv(out_dir(g) / "lemma_class_prob.csv",
            {"delta", "draws", "in_class", "fraction", "ci_lo", "ci_hi", "p1_failures", "p2_failures", "p3_failures"});
    for (double d : a.deltas) {
        const auto r = class_probability(d, spec, a.draws, cfg, g.threads);
        csv.row(d, r.draws, r.in_class, r.fraction, r.interval.lo, r.interval.hi, r.p1_failures, r.p2_failures,
                r.p3_failures);
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------
// survey / scaling

struct SurveyArgs {
    std::string potential;
    std::uint64_t potential_seed = 5;
    double potential_s = 1.0;
    double potential_theta = 0.1;
    std::vector<double> eps{1e-2};
    std::size_t orbits = 500;
    std::uint64_t seed = 7;
    std::vector<double> box{0.6, 1.4};
    double dt = 0.1;
    std::size_t steps = 50000;
    std::string scheme = "leapfrog";
    int k_eval = 10;
    double C = 100.0;
    double escalation = 100.0;
    int max_doublings = 3;
    double energy_tol = 5e-2;
    double width_exponent = 1.0;
    double cutoff_exponent = 1.0;
    double max_undecided = 0.2;

    SurveySettings settings() const {
        SurveySettings s;
        s.integrator.dt = dt;
        s.integrator.steps = steps;
        s.integrator.scheme = scheme_from_string(scheme);
        s.integrator.energy_tol = energy_tol;
        s.classifier.C = C;
        s.classifier.escalation = escalation;
        s.k_eval = k_eval;
        s.max_doublings = max_doublings;
        s.zones.width_exponent = width_exponent;
        s.zones.mode_cutoff_exponent = cutoff_exponent;
        s.max_undecided = max_undecided;
        return s;
    }

    FourierPotential load(json& resolved) const {
        if (!potential.empty()) return load_potential(potential);
        resolved["potential"] = "reference: mu_s draw (n = 2, s = " + std::to_string(potential_s) + ", seed " +
                                std::to_string(potential_seed) + ") repaired at theta = " +
                                std::to_string(potential_theta);
        return reference_survey_potential(2, potential_s, potential_seed, potential_theta);
    }
};

void write_orbits(const fs::path& path, const SurveyResult& r) {
    Csv csv(path, {"orbit", "y1", "y2", "x1", "x2", "verdict", "drift", "energy_drift", "zone", "nearest_k",
                   "nearest_margin", "locked", "steps", "winding1", "winding2", "reason"});
    for (std::size_t i = 0; i < r.orbits.size(); ++i) {
        const auto& o = r.orbits[i];
        auto at = [](const auto& v, std::size_t j) { return j < v.size() ? double(v[j]) : std::nan(""); };
        csv.row(i, at(o.y0, 0), at(o.y0, 1), at(o.x0, 0), at(o.x0, 1), to_string(o.verdict), o.drift,
                o.energy_drift, to_string(o.zone), o.nearest_k.str(), o.nearest_margin, int(o.locked), o.steps,
                at(o.winding, 0), at(o.winding, 1), o.reason);
    }
}

json summary_json(const SurveyResult& r) {
    json j;
    j["epsilon"] = r.epsilon;
    j["samples"] = r.samples;
    const char* names[] = {"torus", "non_torus", "undecided"};
    for (int v = 0; v < 3; ++v)
        j["verdicts"][names[v]] = {{"count", r.count[v]},
                                   {"fraction", r.fraction[v]},
                                   {"ci", {r.interval[v].lo, r.interval[v].hi}}};
    j["not_torus"] = {{"count", r.not_torus},
                      {"fraction", r.not_torus_fraction()},
                      {"ci", {r.not_torus_interval.lo, r.not_torus_interval.hi}}};
    for (int z = 0; z < 3; ++z) {
        const auto zn = to_string(static_cast<Zone>(z));
        for (int v = 0; v < 3; ++v) j["zones"][zn][names[v]] = r.by_zone[z][v];
    }
    j["truncation_bound"] = r.truncation_bound;
    j["quotable"] = r.quotable;
    j["note"] = r.note;
    return j;
}

void survey_plot(const fs::path& path, const SurveyResult& r) {
    std::vector<Series> s{{"torus", "#9ecae1", {}, {}, true},
                          {"non_torus", "#d62728", {}, {}, true},
                          {"undecided", "#ff7f0e", {}, {}, true}};
    for (const auto& o : r.orbits) {
        if (o.y0.size() < 2) continue;
        auto& t = s[static_cast<int>(o.verdict)];
        t.x.push_back(o.y0[0]);
        t.y.push_back(o.y0[1]);
    }
    write_svg(path, {"verdicts over the action plane, eps = " + std::to_string(r.epsilon), "y1", "y2"}, s);
}

void resolve_survey(json& resolved, const SurveySettings& s, const FourierPotential& f) {
    resolved["norm_s"] = norm_s(f);
    resolved["tol_freq"] = "C / T_w^2 with T_w = steps * dt / 2, doubled up to max_doublings times";
    resolved["zone_width_exponent"] = *s.zones.width_exponent;
}

int run_survey(const Globals& g, const SurveyArgs& a, json& resolved) {
    if (a.eps.size() != 1) throw std::invalid_argument("survey takes one --eps value (use scaling for a list)");
    const auto f = a.load(resolved);
    const auto s = a.settings();
    resolve_survey(resolved, s, f);
    const auto [lo, hi] = parse_box(a.box);
    const auto r = nontorus_fraction(f, a.eps[0], ActionRegion::cube(f.dim(), lo, hi), a.orbits, a.seed, s, g.threads);
    const auto dir = out_dir(g);
    write_orbits(dir / "survey_orbits.csv", r);
    write_json(dir / "survey_summary.json", summary_json(r));
    if (f.dim() == 2) survey_plot(dir / "survey.svg", r);
    std::cout << "eps " << r.epsilon << ": torus " << r.fraction[0] << ", non_torus " << r.fraction[1]
              << ", undecided " << r.fraction[2] << (r.quotable ? "" : " (not quotable: " + r.note + ")") << "\n";
    if (!r.quotable) throw QualityFailure("survey is not quotable: " + r.note);
    return exit_ok;
}

int run_scaling(const Globals& g, const SurveyArgs& a, json& resolved) {
    if (a.eps.size() < 2) throw std::invalid_argument("scaling needs at least two --eps values");
    const auto f = a.load(resolved);
    const auto s = a.settings();
    resolve_survey(resolved, s, f);
    const auto [lo, hi] = parse_box(a.box);
    const auto B = ActionRegion::cube(f.dim(), lo, hi);
    const auto dir = out_dir(g);
    Csv pts(dir / "scaling_points.csv", {"eps", "samples", "torus", "non_torus", "undecided", "not_torus_fraction",
                                         "ci_lo", "ci_hi", "quotable"});
    std::vector<FitPoint> fit_pts;
    bool quotable = true;
    json surveys = json::array();
    Series data{"not torus", "#d62728", {}, {}, true};
    for (std::size_t i = 0; i < a.eps.size(); ++i) {
        const auto r = nontorus_fraction(f, a.eps[i], B, a.orbits, a.seed, s, g.threads);
        write_orbits(dir / ("scaling_orbits_" + std::to_string(i) + ".csv"), r);
        surveys.push_back(summary_json(r));
        pts.row(r.epsilon, r.samples, r.count[0], r.count[1], r.count[2], r.not_torus_fraction(),
                r.not_torus_interval.lo, r.not_torus_interval.hi, int(r.quotable));
        fit_pts.push_back(fit_point(r.epsilon, r.not_torus, r.samples));
        data.x.push_back(r.epsilon);
        data.y.push_back(fit_pts.back().m);
        quotable = quotable && r.quotable;
        std::cout << "eps " << r.epsilon << ": not torus " << r.not_torus_fraction() << "\n";
    }
    const auto fit = scaling_fit(fit_pts);
    auto fit_json = [](const Fit& x) {
        return json{{"alpha", x.alpha},   {"alpha_sd", x.alpha_sd}, {"alpha_ci", {x.alpha_ci.lo, x.alpha_ci.hi}},
                    {"beta", x.beta},     {"beta_sd", x.beta_sd},   {"beta_ci", {x.beta_ci.lo, x.beta_ci.hi}},
                    {"gamma", x.gamma},   {"chi2", x.chi2},         {"dof", x.dof},
                    {"with_beta", x.with_beta}};
    };
    json j;
    j["surveys"] = surveys;
    j["reduced_fit"] = fit_json(fit.reduced);
    j["full_fit"] = fit.full ? fit_json(*fit.full) : json(nullptr);
    j["chi2_alpha_one"] = fit.chi2_alpha_one;
    j["chi2_alpha_half"] = fit.chi2_alpha_half;
    j["preferred"] = fit.preferred;
    j["note"] = fit.note;
    j["quotable"] = quotable;
    write_json(dir / "scaling_summary.json", j);

    Series line{"fit alpha = " + std::to_string(fit.reduced.alpha), "#1f77b4", {}, {}, false};
    double e_lo = *std::min_element(a.eps.begin(), a.eps.end()), e_hi = *std::max_element(a.eps.begin(), a.eps.end());
    for (int k = 0; k <= 20; ++k) {
        const double e = e_lo * std::pow(e_hi / e_lo, k / 20.0);
        line.x.push_back(e);
        line.y.push_back(std::exp(fit.reduced.alpha * std::log(e) + fit.reduced.gamma));
    }
    write_svg(dir / "scaling.svg", {"not-torus fraction against eps", "eps", "fraction", true, true}, {data, line});
    std::cout << "alpha = " << fit.reduced.alpha << " [" << fit.reduced.alpha_ci.lo << ", " << fit.reduced.alpha_ci.hi
              << "], preferred " << fit.preferred << "\n";
    if (!quotable) throw QualityFailure("at least one survey is not quotable");
    return exit_ok;
}

// ---------------------------------------------------------------------------
// manifest

std::string strip_brackets(std::string v) {
    if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
    return v;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

json options_of(const CLI::App* a) {
    json j = json::object();
    for (const auto* o : a->get_options()) {
        const std::string name = o->get_single_name();
        if (name.empty() || name == "help" || name == "from-manifest" || name == "version") continue;
        if (o->get_type_size() == 0) {
            j[name] = o->count() > 0;
            continue;
        }
        const std::string v = o->count() ? join(o->results()) : strip_brackets(o->get_default_str());
        j[name] = v;
    }
    return j;
}

std::vector<const CLI::App*> chain_of(const CLI::App& app) {
    std::vector<const CLI::App*> chain;
    const CLI::App* cur = &app;
    while (true) {
        const auto subs = cur->get_subcommands();
        if (subs.empty()) break;
        cur = subs.front();
        chain.push_back(cur);
    }
    return chain;
}

json make_manifest(const CLI::App& app, const json& resolved) {
    json m;
    m["tool"] = "kamtool";
    m["version"] = KAM_VERSION;
    m["global"] = options_of(&app);
    m["command"] = json::array();
    for (const auto* c : chain_of(app)) m["command"].push_back({{"name", c->get_name()}, {"options", options_of(c)}});
    m["resolved"] = resolved;
    return m;
}

void append_options(std::vector<std::string>& argv, const json& opts, bool skip_out) {
    for (const auto& [k, v] : opts.items()) {
        if (skip_out && (k == "out" || k == "threads")) continue;
        if (v.is_boolean()) {
            if (v.get<bool>()) argv.push_back("--" + k);
        } else {
            const auto s = v.get<std::string>();
            if (s.empty()) continue;
            argv.push_back("--" + k);
            argv.push_back(s);
        }
    }
}

/// Replaces `--from-manifest m.json` by the recorded command; other arguments given alongside override.
std::vector<std::string> expand_manifest(int argc, char** argv) {
    std::vector<std::string> in(argv, argv + argc), out{in[0]};
    std::optional<std::string> path;
    std::vector<std::string> rest;
    for (std::size_t i = 1; i < in.size(); ++i) {
        if (in[i] == "--from-manifest" && i + 1 < in.size()) path = in[++i];
        else if (in[i].rfind("--from-manifest=", 0) == 0) path = in[i].substr(16);
        else rest.push_back(in[i]);
    }
    if (!path) return in;
    std::ifstream f(*path);
    if (!f) throw std::invalid_argument("cannot read manifest " + *path);
    const json m = json::parse(f);
    out.insert(out.end(), rest.begin(), rest.end());
    bool has_threads = false;
    for (const auto& r : rest) has_threads = has_threads || r.rfind("--threads", 0) == 0;
    if (!has_threads && m["global"].contains("threads")) {
        out.push_back("--threads");
        out.push_back(m["global"]["threads"].get<std::string>());
    }
    for (const auto& c : m.at("command")) {
        out.push_back(c.at("name").get<std::string>());
        append_options(out, c.at("options"), false);
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical companion for nearly-integrable mechanical systems 1/2|y|^2 + eps f(x)", "kamtool"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", KAM_VERSION);
    Globals g;
    g.out = default_out();
    app.add_option("--out", g.out, "Output directory (default $KAMTOOL_OUT or ./kamtool_out)");
    app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)");
    std::string manifest_path;
    app.add_option("--from-manifest", manifest_path, "Rerun the command recorded in a manifest.json");

    json resolved = json::object();
    std::function<int()> action;

    // potential
    auto* pot = app.add_subcommand("potential", "Sample or inspect potential files")->require_subcommand(1);
    SampleArgs sa;
    auto* ps = pot->add_subcommand("sample", "Draw a potential from mu_s or nu_s");
    ps->add_option("--measure", sa.measure, "mu_s or nu_s");
    ps->add_option("--n", sa.n, "Dimension")->check(CLI::Range(1, 8));
    ps->add_option("--s", sa.s, "Analyticity width")->check(CLI::PositiveNumber);
    ps->add_option("--k-max", sa.k_max, "Sampled modes |k| <= k_max (0 = e^{-K s} <= 1e-12)");
    ps->add_option("--seed", sa.seed, "Run seed");
    ps->add_option("--draw", sa.draw, "Draw index within the run");
    ps->add_option("--file", sa.file, "Output file name inside --out");
    ps->callback([&] { action = [&] { return run_potential_sample(g, sa, resolved); }; });
    std::string show_path;
    auto* pw = pot->add_subcommand("show", "Summarize a potential file");
    pw->add_option("--potential", show_path, "Potential file")->required()->check(CLI::ExistingFile);
    pw->callback([&] { action = [&] { return run_potential_show(g, show_path); }; });

    // class
    auto* cls = app.add_subcommand("class", "Class membership checks")->require_subcommand(1);
    ClassArgs ca;
    auto add_class_opts = [&ca](CLI::App* c) {
        c->add_option("--potential", ca.potential, "Potential file")->required()->check(CLI::ExistingFile);
        c->add_option("--c-K", ca.c_K, "Constant c in K_s(delta) = (2/s) ln(c/delta); <= 0 selects 2n");
        c->add_option("--tol-beta", ca.tol_beta, "Relative (P2) tolerance");
        c->add_option("--tol-margin", ca.tol_margin, "Relative (P3) tolerance");
        c->add_option("--tol-degenerate", ca.tol_degenerate, "Degenerate critical point tolerance");
    };
    auto* cc = cls->add_subcommand("check", "Classify over a delta grid");
    add_class_opts(cc);
    cc->add_option("--delta-grid", ca.delta_grid, "Comma-separated delta values")->delimiter(',');
    cc->callback([&] { action = [&] { return run_class_check(g, ca, resolved); }; });
    auto* cr = cls->add_subcommand("repair", "Move a potential into P_s' at distance theta");
    add_class_opts(cr);
    cr->add_option("--theta", ca.theta, "Repair budget")->check(CLI::Range(1e-12, 1.0));
    cr->callback([&] { action = [&] { return run_class_repair(g, ca, resolved); }; });

    // zones
    ZonesArgs za;
    auto* zn = app.add_subcommand("zones", "Resonant zones and their measure in B");
    zn->add_option("--eps", za.eps, "Perturbation size")->check(CLI::Range(1e-300, 0.999));
    zn->add_option("--n", za.n, "Dimension")->check(CLI::Range(1, 8));
    zn->add_option("--box", za.box, "B = [lo, hi]^n")->delimiter(',');
    zn->add_option("--width-exponent", za.width_exponent, "Zone half-width exponent (< 0 selects 2n + 6)");
    zn->add_option("--cutoff-exponent", za.cutoff_exponent, "Resonant modes |k| <= |ln eps|^e");
    zn->add_option("--samples", za.samples, "Monte Carlo points")->check(CLI::Range(100, 100000000));
    zn->add_option("--seed", za.seed, "Seed");
    zn->callback([&] { action = [&] { return run_zones(g, za, resolved); }; });

    // aa
    AaArgs aa;
    auto* ac = app.add_subcommand("aa", "Action-angle tables E(p), omega, E'' per phase-space component");
    aa.source.add(ac);
    ac->add_option("--uniform", aa.uniform, "Uniform interior samples")->check(CLI::Range(2, 100000));
    ac->add_option("--min-gap", aa.min_gap, "Edge refinement stop (relative to osc F)");
    ac->add_option("--theta", aa.theta, "Collar half-width at finite edges");
    ac->add_option("--rotation-span", aa.rotation_span, "Rotation energy span (<= 0: automatic)");
    ac->add_option("--fd-tol", aa.fd_tol, "Exit 3 when E'' quadrature and finite differences disagree more");
    ac->callback([&] { action = [&] { return run_aa(g, aa); }; });

    // lemmas
    auto* lem = app.add_subcommand("lemmas", "Probes of the measure lemmas")->require_subcommand(1);
    BandArgs ba;
    auto* lb = lem->add_subcommand("band", "Critical energy band measure against theta |ln theta|");
    ba.source.add(lb);
    lb->add_option("--E0", ba.E0, "Band centre (default: highest critical level)");
    lb->add_option("--thetas", ba.thetas, "Band half-widths")->delimiter(',');
    lb->callback([&] { action = [&] { return run_lemma_band(g, ba, resolved); }; });
    KolmogorovArgs ka;
    auto* lk = lem->add_subcommand("kolmogorov", "Measure of |E''| < theta^c per component");
    ka.source.add(lk);
    lk->add_option("--theta", ka.theta, "theta")->check(CLI::Range(1e-12, 1.0));
    lk->add_option("--c", ka.c_exp, "Exponent c");
    lk->callback([&] { action = [&] { return run_lemma_kolmogorov(g, ka); }; });
    LevelSetArgs la;
    auto* ll = lem->add_subcommand("level-set", "meas{|x^m| <= theta} on [-1, 1] against 2 theta^{1/m}");
    ll->add_option("--power", la.power, "m");
    ll->add_option("--thetas", la.thetas, "theta values")->delimiter(',');
    ll->add_option("--cells", la.cells, "Grid cells");
    ll->callback([&] { action = [&] { return run_lemma_level_set(g, la); }; });
    P1Args pa;
    auto* lp = lem->add_subcommand("p1", "Monte Carlo (P1) failure rate under mu_s");
    lp->add_option("--n", pa.n, "Dimension")->check(CLI::Range(1, 8));
    lp->add_option("--s", pa.s, "Width")->check(CLI::PositiveNumber);
    lp->add_option("--k-max", pa.k_max, "Sampling cutoff (0 = automatic)");
    lp->add_option("--seed", pa.seed, "Seed");
    lp->add_option("--delta", pa.delta, "delta")->check(CLI::Range(0.0, 0.999));
    lp->add_option("--draws", pa.draws, "Number of draws");
    lp->add_option("--c-K", pa.c_K, "Cutoff constant (<= 0 selects 2n)");
    lp->callback([&] { action = [&] { return run_lemma_p1(g, pa, resolved); }; });
    ClassProbArgs cp;
    auto* lc = lem->add_subcommand("class-prob", "Fraction of random potentials in the class");
    lc->add_option("--measure", cp.measure, "mu_s or nu_s");
    lc->add_option("--n", cp.n, "Dimension")->check(CLI::Range(1, 8));
    lc->add_option("--s", cp.s, "Width")->check(CLI::PositiveNumber);
    lc->add_option("--k-max", cp.k_max, "Sampling cutoff (0 = automatic)");
    lc->add_option("--seed", cp.seed, "Seed");
    lc->add_option("--deltas", cp.deltas, "delta values")->delimiter(',');
    lc->add_option("--draws", cp.draws, "Draws per delta");
    lc->add_option("--c-K", cp.c_K, "Cutoff constant (<= 0 selects 2n)");
    lc->callback([&] { action = [&] { return run_lemma_class_prob(g, cp, resolved); }; });

    // survey / scaling
    SurveyArgs sv;
    auto add_survey_opts = [&sv](CLI::App* c) {
        c->add_option("--potential", sv.potential, "Potential file (default: the reference repaired mu_s draw)");
        c->add_option("--potential-seed", sv.potential_seed, "Seed of the reference potential");
        c->add_option("--potential-s", sv.potential_s, "Width of the reference potential");
        c->add_option("--potential-theta", sv.potential_theta, "Repair distance of the reference potential");
        c->add_option("--eps", sv.eps, "Perturbation size(s)")->delimiter(',')->check(CLI::Range(0.0, 0.999));
        c->add_option("--orbits", sv.orbits, "Orbits per eps")->check(CLI::Range(1, 100000000));
        c->add_option("--seed", sv.seed, "Orbit seed (shared across eps: paired runs)");
        c->add_option("--box", sv.box, "B = [lo, hi]^n")->delimiter(',');
        c->add_option("--dt", sv.dt, "Time step")->check(CLI::PositiveNumber);
        c->add_option("--steps", sv.steps, "Base integration steps")->check(CLI::Range(16, 1000000000));
        c->add_option("--scheme", sv.scheme, "leapfrog or yoshida4");
        c->add_option("--k-eval", sv.k_eval, "Fourier cutoff for evaluation");
        c->add_option("--tol-C", sv.C, "tol_freq = C / T_w^2");
        c->add_option("--escalation", sv.escalation, "non_torus needs drift > escalation * tol_freq");
        c->add_option("--max-doublings", sv.max_doublings, "Window doublings before a final verdict");
        c->add_option("--energy-tol", sv.energy_tol, "Relative energy error that flags an orbit");
        c->add_option("--width-exponent", sv.width_exponent, "Zone width sqrt(eps) |ln eps|^w");
        c->add_option("--cutoff-exponent", sv.cutoff_exponent, "Zone modes |k| <= |ln eps|^e");
        c->add_option("--max-undecided", sv.max_undecided, "Quotable needs undecided below this fraction");
    };
    auto* su = app.add_subcommand("survey", "Torus / non-torus survey at one eps");
    add_survey_opts(su);
    su->callback([&] { action = [&] { return run_survey(g, sv, resolved); }; });
    auto* sc = app.add_subcommand("scaling", "Surveys over several eps and the scaling fit");
    add_survey_opts(sc);
    sc->callback([&] { action = [&] { return run_scaling(g, sv, resolved); }; });

    try {
        const auto args = expand_manifest(argc, argv);
        std::vector<const char*> cargs;
        for (const auto& a : args) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "kamtool: " << e.what() << "\n";
        return exit_validation;
    }

    int code = exit_ok;
    std::string failure;
    try {
        code = action();
    } catch (const QualityFailure& e) {
        failure = e.what();
        code = exit_quality;
    } catch (const std::invalid_argument& e) {
        std::cerr << "kamtool: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::domain_error& e) {
        std::cerr << "kamtool: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::out_of_range& e) {
        std::cerr << "kamtool: " << e.what() << "\n";
        return exit_validation;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "kamtool: malformed input: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "kamtool: numeric failure: " << e.what() << "\n";
        return exit_quality;
    }
    json m = make_manifest(app, resolved);
    m["exit_code"] = code;
    write_json(out_dir(g) / "manifest.json", m);
    if (!failure.empty()) std::cerr << "kamtool: " << failure << "\n";
    return code;
}
