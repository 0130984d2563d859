#pragma once

#include "kam/fourier_potential.hpp"
#include "kam/resonance_geometry.hpp"
#include "kam/stats.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kam {

/// f, grad f and Hessian from a truncated mode list, with e^{i k.x} built from per-axis power tables.
class ForceField {
public:
    explicit ForceField(EvaluationModel model);
    /// Keeps modes with |k| <= k_eval (all stored modes when k_eval < 1).
    ForceField(const FourierPotential& f, int k_eval);

    int dim() const { return model_.n; }
    const EvaluationModel& model() const { return model_; }
    /// sum over modes of 2|k|^2 |c_k|: bound on the Hessian entries.
    double curvature_bound() const { return curvature_; }

    /// Returns f(x); writes grad f(x) to grad.
    double value_gradient(std::span<const double> x, std::span<double> grad) const;
    /// Row-major n x n Hessian.
    void hessian(std::span<const double> x, std::span<double> out) const;

private:
    void fill_phases(std::span<const double> x) const;

    EvaluationModel model_;
    double curvature_ = 0.0;
    int M_ = 0;
};

enum class Scheme { leapfrog, yoshida4 };
const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

struct IntegratorSettings {
    double dt = 0.1;
    std::size_t steps = 50'000;
    Scheme scheme = Scheme::leapfrog;
    /// Keep every stride-th state.
    std::size_t stride = 1;
    /// Orbits with max |H - H0| / eps above this are flagged.
    double energy_tol = 5e-2;
    /// Guard: dt sqrt(eps * curvature bound) must stay below this.
    double stability_limit = 0.5;
};

/// States at t = j * stride * dt. x is unwrapped (winding = floor(x / 2pi)).
struct Trajectory {
    int n = 0;
    double dt = 0.0;
    double epsilon = 0.0;
    std::size_t stride = 1;
    std::vector<double> x;
    std::vector<double> y;
    /// max |H - H0| / eps (absolute when eps = 0).
    double energy_drift = 0.0;
    bool energy_flag = false;

    std::size_t size() const { return n ? x.size() / n : 0; }
    double sample_dt() const { return dt * static_cast<double>(stride); }
    std::span<const double> x_at(std::size_t j) const { return {x.data() + j * n, static_cast<std::size_t>(n)}; }
    std::span<const double> y_at(std::size_t j) const { return {y.data() + j * n, static_cast<std::size_t>(n)}; }
};

/// Throws std::invalid_argument when the stability guard fails.
Trajectory integrate(const ForceField& f, double eps, std::span<const double> y0, std::span<const double> x0,
                     const IntegratorSettings& s);

/// In-place steps of the chosen scheme (no sampling, no guard); dt may be negative.
void advance(const ForceField& f, double eps, std::span<double> y, std::span<double> x, double dt, std::size_t steps,
             Scheme scheme);

struct FliResult {
    /// max over t of log |w(t)| for the tangent flow started at a unit vector.
    double fli = 0.0;
    std::vector<double> history;
};

/// Fast Lyapunov indicator; tangent vector starts at (dy, dx) = (0, e/|e|) with e = (1, ..., 1).
FliResult fast_lyapunov_indicator(const ForceField& f, double eps, std::span<const double> y0,
                                  std::span<const double> x0, double dt, std::size_t steps, std::size_t record = 0);

enum class Verdict { torus, non_torus, undecided };
const char* to_string(Verdict v);

struct ClassifierSettings {
    /// tol_freq = C / T_w^2 with T_w the window length in time. Calibrated on integrable
    /// separable potentials, where every orbit off the separatrices is a torus.
    double C = 100.0;
    /// non_torus needs drift > escalation * tol_freq.
    double escalation = 100.0;
    /// Nearest-resonance search radius in |k|.
    int diagnostic_K = 8;
    /// Windows shorter than this multiple of the slowest detected period are undecided.
    double period_factor = 2.0;
};

struct OrbitClassification {
    std::vector<double> y0;
    std::vector<double> x0;
    Verdict verdict = Verdict::undecided;
    std::string reason;
    std::vector<double> omega_first;
    std::vector<double> omega_second;
    double drift = 0.0;
    double tol_freq = 0.0;
    double energy_drift = 0.0;
    double slowest_period = 0.0;
    WaveVector nearest_k;
    double nearest_margin = 0.0;
    /// omega . nearest_k vanishes to within tol_freq: rational winding in a resonant plane.
    bool locked = false;
};

/// Weighted Birkhoff average of the angle increments over samples [first, last].
std::vector<double> birkhoff_frequency(const Trajectory& t, std::size_t first, std::size_t last);

OrbitClassification classify_orbit(const Trajectory& t, const ClassifierSettings& cs = {});

/// Survey zone defaults: width sqrt(eps) |ln eps| and modes |k| <= |ln eps|, so that B0 is not empty at desk scale.
inline ZoneConfig survey_zone_config() {
    ZoneConfig z;
    z.width_exponent = 1.0;
    z.mode_cutoff_exponent = 1.0;
    return z;
}

struct SurveySettings {
    IntegratorSettings integrator;
    ClassifierSettings classifier;
    /// Fourier cutoff for floor tails.
    int k_eval = 8;
    /// Zone labels for the breakdown.
    ZoneConfig zones = survey_zone_config();
    /// Quotable needs undecided below this fraction.
    double max_undecided = 0.2;
    std::size_t min_orbits = 500;
    /// Orbits not classified as tori are re-run with doubled length up to this many times.
    int max_doublings = 3;
};


struct OrbitRecord {
    std::vector<double> y0;
    std::vector<double> x0;
    Verdict verdict = Verdict::undecided;
    std::string reason;
    double drift = 0.0;
    double energy_drift = 0.0;
    Zone zone = Zone::B0;
    WaveVector nearest_k;
    double nearest_margin = 0.0;
    bool locked = false;
    /// Integration steps behind the verdict.
    std::size_t steps = 0;
    /// Winding numbers floor(x(T) / 2pi).
    std::vector<long> winding;
};

struct SurveyResult {
    double epsilon = 0.0;
    std::size_t samples = 0;
    std::size_t count[3] = {0, 0, 0};
    double fraction[3] = {0, 0, 0};
    Interval interval[3] = {};
    /// count by [zone][verdict].
    std::size_t by_zone[3][3] = {};
    /// non_torus + undecided.
    std::size_t not_torus = 0;
    Interval not_torus_interval{0.0, 1.0};
    double truncation_bound = 0.0;
    bool quotable = false;
    std::string note;
    std::vector<OrbitRecord> orbits;

    double not_torus_fraction() const { return samples ? double(not_torus) / samples : 0.0; }
    /// Fraction of the zone's orbits that are not tori (NaN for an empty zone).
    double zone_not_torus_fraction(Zone z) const;
};

/// Default survey potential: a mu_s draw repaired into P_s' at distance theta.
FourierPotential reference_survey_potential(int n = 2, double s = 1.0, std::uint64_t seed = 5, double theta = 0.1);

/// Uniform (y0, x0) in B x T^n; orbit i uses sub-stream i of seed, so runs at different eps are paired.
SurveyResult nontorus_fraction(const FourierPotential& f, double eps, const ActionRegion& B, std::size_t N,
                               std::uint64_t seed, const SurveySettings& s = {}, unsigned threads = 0);

struct FitPoint {
    double epsilon;
    double m;
    /// Standard deviation of log m.
    double sd_log;
};

/// Binomial point; zero counts use m = (count + 1/2) / (samples + 1). sd_log = sqrt((1 - m) / (samples m)).
FitPoint fit_point(double eps, std::size_t count, std::size_t samples);

struct Fit {
    double alpha = 0.0, beta = 0.0, gamma = 0.0;
    double alpha_sd = 0.0, beta_sd = 0.0, gamma_sd = 0.0;
    Interval alpha_ci{0, 0};
    Interval beta_ci{0, 0};
    double chi2 = 0.0;
    int dof = 0;
    bool with_beta = false;
};

struct ScalingFit {
    /// log m = alpha log eps + beta log|ln eps| + gamma; present with >= 3 points over >= 1.5 decades.
    std::optional<Fit> full;
    /// beta = 0 variant.
    Fit reduced;
    /// chi^2 of the reduced model with alpha pinned at 1 and at 1/2.
    double chi2_alpha_one = 0.0;
    double chi2_alpha_half = 0.0;
    std::string preferred;
    std::string note;
};

/// Weighted least squares on log m.
/// Throws std::invalid_argument with fewer than 2 points or a degenerate design.
ScalingFit scaling_fit(std::span<const FitPoint> points);

} // namespace kam
