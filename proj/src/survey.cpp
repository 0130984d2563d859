#include "kam/survey.hpp"

#include "kam/class_membership.hpp"
#include "kam/random_potentials.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace kam {

namespace {

constexpr double two_pi = 2 * std::numbers::pi;

} // namespace

ForceField::ForceField(EvaluationModel model) : model_(std::move(model)) {
    for (std::size_t i = 0; i < model_.k.size(); ++i)
        curvature_ += 2.0 * static_cast<double>(model_.k[i].l2sq()) * std::abs(model_.c[i]);
    M_ = model_.max_component;
}

namespace {

// drops stored modes above k_eval too; their sup contribution joins the truncation bound
EvaluationModel truncated_model(const FourierPotential& f, int k_eval) {
    EvaluationModel m = evaluation_model(f, k_eval);
    if (k_eval < 1) return m;
    EvaluationModel out;
    out.n = m.n;
    out.truncation_bound = m.truncation_bound;
    out.gradient_truncation_bound = m.gradient_truncation_bound;
    for (std::size_t i = 0; i < m.k.size(); ++i) {
        if (m.k[i].l1() <= k_eval) {
            out.k.push_back(m.k[i]);
            out.c.push_back(m.c[i]);
            for (int c : m.k[i].components()) out.max_component = std::max(out.max_component, std::abs(c));
        } else {
            out.truncation_bound += 2.0 * std::abs(m.c[i]);
            out.gradient_truncation_bound += 2.0 * m.k[i].l2() * std::abs(m.c[i]);
        }
    }
    return out;
}

} // namespace

ForceField::ForceField(const FourierPotential& f, int k_eval) : ForceField(truncated_model(f, k_eval)) {}

// per-thread scratch: a ForceField is shared by the workers of a survey
thread_local std::vector<Complex> powers_, phase_;

void ForceField::fill_phases(std::span<const double> x) const {
    const int n = model_.n, w = 2 * M_ + 1;
    powers_.resize(static_cast<std::size_t>(n) * w);
    phase_.resize(model_.k.size());
    for (int d = 0; d < n; ++d) {
        Complex* p = powers_.data() + d * w + M_;
        const Complex e(std::cos(x[d]), std::sin(x[d]));
        p[0] = 1.0;
        for (int m = 1; m <= M_; ++m) {
            p[m] = p[m - 1] * e;
            p[-m] = std::conj(p[m]);
        }
    }
    for (std::size_t i = 0; i < model_.k.size(); ++i) {
        Complex ph = 1.0;
        for (int d = 0; d < n; ++d) ph *= powers_[d * w + M_ + model_.k[i][d]];
        phase_[i] = model_.c[i] * ph;
    }
}

double ForceField::value_gradient(std::span<const double> x, std::span<double> grad) const {
    fill_phases(x);
    std::fill(grad.begin(), grad.end(), 0.0);
    double v = 0.0;
    for (std::size_t i = 0; i < model_.k.size(); ++i) {
        v += 2.0 * phase_[i].real();
        const double im = 2.0 * phase_[i].imag();
        for (int d = 0; d < model_.n; ++d) grad[d] -= model_.k[i][d] * im;
    }
    return v;
}

void ForceField::hessian(std::span<const double> x, std::span<double> out) const {
    fill_phases(x);
    const int n = model_.n;
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < model_.k.size(); ++i) {
        const double re = 2.0 * phase_[i].real();
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) out[a * n + b] -= model_.k[i][a] * model_.k[i][b] * re;
    }
}

const char* to_string(Scheme s) { return s == Scheme::leapfrog ? "leapfrog" : "yoshida4"; }

Scheme scheme_from_string(const std::string& name) {
    if (name == "leapfrog") return Scheme::leapfrog;
    if (name == "yoshida4") return Scheme::yoshida4;
    throw std::invalid_argument("unknown integrator scheme '" + name + "' (expected leapfrog or yoshida4)");
}

namespace {

/// Kick-drift-kick; grad holds grad f(x) on entry and on exit. Returns f at the new x.
double leapfrog_step(const ForceField& f, double eps, std::span<double> y, std::span<double> x,
                     std::span<double> grad, double h) {
    const int n = f.dim();
    for (int d = 0; d < n; ++d) y[d] -= 0.5 * h * eps * grad[d];
    for (int d = 0; d < n; ++d) x[d] += h * y[d];
    const double v = f.value_gradient(x, grad);
    for (int d = 0; d < n; ++d) y[d] -= 0.5 * h * eps * grad[d];
    return v;
}

// Yoshida's fourth-order triple jump
const double yoshida_w1 = 1.0 / (2.0 - std::cbrt(2.0));
const double yoshida_w0 = -std::cbrt(2.0) / (2.0 - std::cbrt(2.0));

double step(const ForceField& f, double eps, std::span<double> y, std::span<double> x, std::span<double> grad,
            double h, Scheme scheme) {
    if (scheme == Scheme::leapfrog) return leapfrog_step(f, eps, y, x, grad, h);
    leapfrog_step(f, eps, y, x, grad, yoshida_w1 * h);
    leapfrog_step(f, eps, y, x, grad, yoshida_w0 * h);
    return leapfrog_step(f, eps, y, x, grad, yoshida_w1 * h);
}

double energy(std::span<const double> y, double eps, double fx) {
    double k = 0.0;
    for (double v : y) k += v * v;
    return 0.5 * k + eps * fx;
}

} // namespace

void advance(const ForceField& f, double eps, std::span<double> y, std::span<double> x, double dt, std::size_t steps,
             Scheme scheme) {
    std::vector<double> grad(f.dim());
    f.value_gradient(x, grad);
    for (std::size_t i = 0; i < steps; ++i) step(f, eps, y, x, grad, dt, scheme);
}

Trajectory integrate(const ForceField& f, double eps, std::span<const double> y0, std::span<const double> x0,
                     const IntegratorSettings& s) {
    const int n = f.dim();
    if (static_cast<int>(y0.size()) != n || static_cast<int>(x0.size()) != n)
        throw std::invalid_argument("integrate: initial condition has wrong dimension");
    if (!(s.dt > 0) || s.stride == 0) throw std::invalid_argument("integrate: dt and stride must be positive");
    if (eps < 0) throw std::invalid_argument("integrate: eps must be >= 0");
    const double guard = s.dt * std::sqrt(eps * f.curvature_bound());
    if (guard >= s.stability_limit)
        throw std::invalid_argument("integrate: dt sqrt(eps |D^2 f|) = " + std::to_string(guard) +
                                    " exceeds the stability limit " + std::to_string(s.stability_limit));

    Trajectory t;
    t.n = n;
    t.dt = s.dt;
    t.epsilon = eps;
    t.stride = s.stride;
    const std::size_t samples = s.steps / s.stride + 1;
    t.x.reserve(samples * n);
    t.y.reserve(samples * n);

    std::vector<double> y(y0.begin(), y0.end()), x(x0.begin(), x0.end()), grad(n);
    double fx = f.value_gradient(x, grad);
    const double H0 = energy(y, eps, fx);
    t.x.insert(t.x.end(), x.begin(), x.end());
    t.y.insert(t.y.end(), y.begin(), y.end());
    double worst = 0.0;
    for (std::size_t i = 1; i <= s.steps; ++i) {
        fx = step(f, eps, y, x, grad, s.dt, s.scheme);
        worst = std::max(worst, std::abs(energy(y, eps, fx) - H0));
        if (i % s.stride == 0) {
            t.x.insert(t.x.end(), x.begin(), x.end());
            t.y.insert(t.y.end(), y.begin(), y.end());
        }
    }
    t.energy_drift = eps > 0 ? worst / eps : worst;
    t.energy_flag = t.energy_drift > s.energy_tol;
    return t;
}

FliResult fast_lyapunov_indicator(const ForceField& f, double eps, std::span<const double> y0,
                                  std::span<const double> x0, double dt, std::size_t steps, std::size_t record) {
    const int n = f.dim();
    std::vector<double> y(y0.begin(), y0.end()), x(x0.begin(), x0.end()), grad(n), H(n * n);
    std::vector<double> wy(n, 0.0), wx(n, 1.0 / std::sqrt(double(n)));
    // log of the accumulated renormalisation keeps |w| finite on chaotic orbits
    double log_scale = 0.0;
    FliResult r;
    auto kick = [&](double h) {
        f.value_gradient(x, grad);
        f.hessian(x, H);
        for (int a = 0; a < n; ++a) {
            y[a] -= h * eps * grad[a];
            double s = 0.0;
            for (int b = 0; b < n; ++b) s += H[a * n + b] * wx[b];
            wy[a] -= h * eps * s;
        }
    };
    for (std::size_t i = 0; i < steps; ++i) {
        kick(0.5 * dt);
        for (int d = 0; d < n; ++d) {
            x[d] += dt * y[d];
            wx[d] += dt * wy[d];
        }
        kick(0.5 * dt);
        double norm2 = 0.0;
        for (int d = 0; d < n; ++d) norm2 += wx[d] * wx[d] + wy[d] * wy[d];
        const double lw = log_scale + 0.5 * std::log(norm2);
        r.fli = std::max(r.fli, lw);
        if (record && (i + 1) % record == 0) r.history.push_back(lw);
        if (norm2 > 1e100) {
            const double c = 1.0 / std::sqrt(norm2);
            for (int d = 0; d < n; ++d) {
                wx[d] *= c;
                wy[d] *= c;
            }
            log_scale += 0.5 * std::log(norm2);
        }
    }
    return r;
}

const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::torus: return "torus";
    case Verdict::non_torus: return "non_torus";
    case Verdict::undecided: return "undecided";
    }
    return "?";
}

std::vector<double> birkhoff_frequency(const Trajectory& t, std::size_t first, std::size_t last) {
    if (last <= first || last >= t.size()) throw std::invalid_argument("birkhoff_frequency: bad window");
    const int n = t.n;
    const std::size_t M = last - first;
    std::vector<double> acc(n, 0.0);
    double wsum = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
        const double s = (j + 0.5) / M;
        const double w = std::exp(-1.0 / (s * (1.0 - s)));
        wsum += w;
        const auto a = t.x_at(first + j), b = t.x_at(first + j + 1);
        for (int d = 0; d < n; ++d) acc[d] += w * (b[d] - a[d]);
    }
    for (auto& v : acc) v /= wsum * t.sample_dt();
    return acc;
}

OrbitClassification classify_orbit(const Trajectory& t, const ClassifierSettings& cs) {
    OrbitClassification c;
    const int n = t.n;
    const std::size_t N = t.size();
    if (N > 0) {
        c.y0.assign(t.y_at(0).begin(), t.y_at(0).end());
        c.x0.assign(t.x_at(0).begin(), t.x_at(0).end());
    }
    c.energy_drift = t.energy_drift;
    if (N < 9) {
        c.reason = "trajectory too short for two windows";
        return c;
    }
    const std::size_t mid = (N - 1) / 2;
    const double Tw = mid * t.sample_dt();
    c.omega_first = birkhoff_frequency(t, 0, mid);
    c.omega_second = birkhoff_frequency(t, mid, 2 * mid);
    for (int d = 0; d < n; ++d) c.drift = std::max(c.drift, std::abs(c.omega_first[d] - c.omega_second[d]));
    c.tol_freq = cs.C / (Tw * Tw);

    // slowest visible oscillation of the actions: two zero crossings of y - mean per period
    const double T = 2 * Tw;
    for (int d = 0; d < n; ++d) {
        double mean = 0.0, lo = INFINITY, hi = -INFINITY;
        for (std::size_t j = 0; j <= 2 * mid; ++j) {
            const double v = t.y_at(j)[d];
            mean += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        mean /= double(2 * mid + 1);
        if (hi - lo <= 1e-13 * std::max(1.0, std::abs(mean))) continue;
        std::size_t crossings = 0;
        bool above = t.y_at(0)[d] > mean;
        for (std::size_t j = 1; j <= 2 * mid; ++j) {
            const bool a = t.y_at(j)[d] > mean;
            if (a != above) ++crossings;
            above = a;
        }
        const double period = crossings ? 2 * T / double(crossings) : INFINITY;
        c.slowest_period = std::max(c.slowest_period, period);
    }

    c.nearest_margin = INFINITY;
    for (auto& k : star_vectors(n, cs.diagnostic_K)) {
        const double m = std::abs(k.dot(c.omega_second));
        if (m < c.nearest_margin) {
            c.nearest_margin = m;
            c.nearest_k = k;
        }
    }
    c.locked = c.nearest_margin <= 10.0 * std::max(c.tol_freq, c.drift) * c.nearest_k.l1();

    if (t.energy_flag) {
        c.reason = "energy drift above tolerance";
    } else if (Tw < cs.period_factor * c.slowest_period) {
        c.reason = "window shorter than the slowest period";
    } else if (c.drift > cs.escalation * c.tol_freq) {
        c.verdict = Verdict::non_torus;
        c.reason = "frequency drift";
    } else if (c.drift < c.tol_freq) {
        c.verdict = Verdict::torus;
    } else {
        c.reason = "drift between tol_freq and the escalation threshold";
    }
    return c;
}


double SurveyResult::zone_not_torus_fraction(Zone z) const {
    const auto& row = by_zone[static_cast<int>(z)];
    const std::size_t total = row[0] + row[1] + row[2];
    if (total == 0) return std::nan("");
    return double(row[1] + row[2]) / double(total);
}

FourierPotential reference_survey_potential(int n, double s, std::uint64_t seed, double theta) {
    return repair_to_Ps_prime(sample({MeasureKind::mu_s, n, s, 0, seed}, 0), theta).potential;
}

SurveyResult nontorus_fraction(const FourierPotential& f, double eps, const ActionRegion& B, std::size_t N,
                               std::uint64_t seed, const SurveySettings& s, unsigned threads) {
    const int n = f.dim();
    if (B.dim() != n) throw std::invalid_argument("nontorus_fraction: region and potential differ in dimension");
    if (N == 0) throw std::invalid_argument("nontorus_fraction: need at least one orbit");
    if (eps < 0) throw std::invalid_argument("nontorus_fraction: eps must be >= 0");
    const ForceField field(f, s.k_eval);
    std::optional<ZoneDecomposition> zones;
    if (eps > 0 && eps < 1) zones = make_zones(eps, n, s.zones);

    SurveyResult r;
    r.epsilon = eps;
    r.samples = N;
    r.truncation_bound = field.model().truncation_bound;
    r.orbits.resize(N);
    // fail fast on the stability guard instead of once per orbit
    if (s.integrator.dt * std::sqrt(eps * field.curvature_bound()) >= s.integrator.stability_limit)
        throw std::invalid_argument("nontorus_fraction: dt too large for eps |D^2 f| (stability guard)");

    parallel_for(N, threads, [&](std::size_t i) {
        SplitMix64 rng(derive_seed(seed, i));
        std::vector<double> u(n), y0(n), x0(n);
        for (auto& v : u) v = rng.uniform();
        B.map_unit(u, y0);
        for (auto& v : x0) v = two_pi * rng.uniform();
        IntegratorSettings is = s.integrator;
        Trajectory t;
        OrbitClassification c;
        // orbits that are not clearly tori get longer windows before a verdict
        for (int attempt = 0;; ++attempt) {
            t = integrate(field, eps, y0, x0, is);
            c = classify_orbit(t, s.classifier);
            if (c.verdict == Verdict::torus || attempt == s.max_doublings || t.energy_flag) break;
            is.steps *= 2;
        }
        OrbitRecord& o = r.orbits[i];
        o.steps = is.steps;
        o.y0 = y0;
        o.x0 = x0;
        o.verdict = c.verdict;
        o.reason = c.reason;
        o.drift = c.drift;
        o.energy_drift = c.energy_drift;
        o.nearest_k = c.nearest_k;
        o.nearest_margin = c.nearest_margin;
        o.locked = c.locked;
        o.zone = zones ? zones->classify(y0).zone : Zone::B0;
        const auto xe = t.x_at(t.size() - 1);
        for (int d = 0; d < n; ++d) o.winding.push_back(static_cast<long>(std::floor(xe[d] / two_pi)));
    });

    for (const auto& o : r.orbits) {
        ++r.count[static_cast<int>(o.verdict)];
        ++r.by_zone[static_cast<int>(o.zone)][static_cast<int>(o.verdict)];
    }
    for (int v = 0; v < 3; ++v) {
        r.fraction[v] = double(r.count[v]) / double(N);
        r.interval[v] = wilson_interval(r.count[v], N);
    }
    r.not_torus = r.count[1] + r.count[2];
    r.not_torus_interval = wilson_interval(r.not_torus, N);
    r.quotable = N >= s.min_orbits && r.fraction[2] < s.max_undecided;
    if (N < s.min_orbits) r.note = "fewer than " + std::to_string(s.min_orbits) + " orbits";
    else if (!r.quotable) r.note = "undecided fraction above " + std::to_string(s.max_undecided);
    return r;
}

FitPoint fit_point(double eps, std::size_t count, std::size_t samples) {
    if (samples == 0) throw std::invalid_argument("fit_point: no samples");
    const double m = count ? double(count) / double(samples) : 0.5 / (double(samples) + 1.0);
    const double nm = std::max(1.0, count ? double(count) : 0.5);
    return {eps, m, std::sqrt(std::max(1.0 - m, 1.0 / double(samples)) / nm)};
}

namespace {

struct Solve {
    Eigen::VectorXd coef;
    Eigen::MatrixXd cov;
    double chi2;
};

Solve weighted_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& b, const Eigen::VectorXd& w) {
    const Eigen::MatrixXd A = w.cwiseSqrt().asDiagonal() * X;
    const Eigen::VectorXd rhs = w.cwiseSqrt().asDiagonal() * b;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-12 * sv(0))
        throw std::invalid_argument("scaling_fit: degenerate design matrix");
    Solve s;
    s.coef = svd.solve(rhs);
    s.cov = (A.transpose() * A).inverse();
    s.chi2 = (A * s.coef - rhs).squaredNorm();
    return s;
}

} // namespace

ScalingFit scaling_fit(std::span<const FitPoint> points) {
    const int m = static_cast<int>(points.size());
    if (m < 2) throw std::invalid_argument("scaling_fit: need at least two eps values");
    Eigen::VectorXd le(m), lle(m), lm(m), w(m);
    double lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i < m; ++i) {
        const auto& p = points[i];
        if (!(p.epsilon > 0 && p.epsilon < 1) || !(p.m > 0) || !(p.sd_log > 0))
            throw std::invalid_argument("scaling_fit: need 0 < eps < 1, m > 0 and sd_log > 0");
        le(i) = std::log(p.epsilon);
        lle(i) = std::log(std::abs(std::log(p.epsilon)));
        lm(i) = std::log(p.m);
        w(i) = 1.0 / (p.sd_log * p.sd_log);
        lo = std::min(lo, p.epsilon);
        hi = std::max(hi, p.epsilon);
    }
    const double decades = std::log10(hi / lo);
    auto ci = [](double v, double sd) { return Interval{v - 1.96 * sd, v + 1.96 * sd}; };

    ScalingFit out;
    {
        Eigen::MatrixXd X(m, 2);
        X.col(0) = le;
        X.col(1).setOnes();
        const Solve s = weighted_ls(X, lm, w);
        Fit& f = out.reduced;
        f.alpha = s.coef(0);
        f.gamma = s.coef(1);
        f.alpha_sd = std::sqrt(s.cov(0, 0));
        f.gamma_sd = std::sqrt(s.cov(1, 1));
        f.alpha_ci = ci(f.alpha, f.alpha_sd);
        f.chi2 = s.chi2;
        f.dof = m - 2;
    }
    if (m >= 3 && decades >= 1.5) {
        Eigen::MatrixXd X(m, 3);
        X.col(0) = le;
        X.col(1) = lle;
        X.col(2).setOnes();
        const Solve s = weighted_ls(X, lm, w);
        Fit f;
        f.with_beta = true;
        f.alpha = s.coef(0);
        f.beta = s.coef(1);
        f.gamma = s.coef(2);
        f.alpha_sd = std::sqrt(s.cov(0, 0));
        f.beta_sd = std::sqrt(s.cov(1, 1));
        f.gamma_sd = std::sqrt(s.cov(2, 2));
        f.alpha_ci = ci(f.alpha, f.alpha_sd);
        f.beta_ci = ci(f.beta, f.beta_sd);
        f.chi2 = s.chi2;
        f.dof = m - 3;
        out.full = f;
    } else {
        out.note = "beta not fitted: needs >= 3 eps values over >= 1.5 decades (have " + std::to_string(m) + " over " +
                   std::to_string(decades) + ")";
    }

    // alpha pinned: gamma is the weighted mean of log m - alpha log eps
    auto pinned_chi2 = [&](double alpha) {
        const Eigen::VectorXd r = lm - alpha * le;
        const double g = (w.array() * r.array()).sum() / w.sum();
        return (w.array() * (r.array() - g).square()).sum();
    };
    out.chi2_alpha_one = pinned_chi2(1.0);
    out.chi2_alpha_half = pinned_chi2(0.5);
    out.preferred = out.chi2_alpha_one <= out.chi2_alpha_half ? "alpha = 1" : "alpha = 1/2";
    return out;
}

} // namespace kam
