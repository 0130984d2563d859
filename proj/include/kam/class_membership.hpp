#pragma once

#include "kam/fourier_potential.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

namespace kam {

/// Numeric settings of the class checks. Every value is echoed in the reports.
struct ClassConfig {
    /// Constant c of K_s(delta) = (2/s) ln(c/delta); <= 0 selects 2n.
    double c_K = 0.0;
    /// P2 passes iff beta > tol_beta * p2_scale(F). Relative, so the verdict is invariant under F -> cF.
    double tol_beta = 1e-10;
    /// P3 passes iff every margin > tol_margin * p3_scale(F).
    double tol_margin = 1e-10;
    /// Critical points with |F''| <= tol_degenerate * sup|F''| are degenerate.
    double tol_degenerate = 1e-8;
    /// Refuse to enumerate more low modes than this.
    std::size_t max_modes = 2'000'000;
};

double default_c_K(int n);
double resolved_c_K(const ClassConfig& cfg, int n);

/// K_s(delta) = (2/s) ln(c_K/delta). Rejects delta <= 0 or delta >= c_K.
double cutoff_K(double delta, double s, double c_K);

struct P1Violation {
    WaveVector k;
    double amplitude;
    double threshold;
    bool from_tail;
};

struct P1Result {
    bool pass = true;
    std::vector<P1Violation> violations;
    std::string note;
};

/// (P1): |f_k| >= delta |k|^{-(n+3)/2} e^{-|k|s} for star k with |k| > K_s(delta).
/// Floor tails are checked analytically; sampled potentials only up to their k_max.
P1Result check_P1(const FourierPotential& f, double delta, double c_K);

struct MorseBeta {
    /// Attained minimum of |F'| + |F''| after refinement (an upper bound on the true minimum).
    double beta = 0.0;
    /// Certified lower bound from the grid and the Lipschitz constant of |F'| + |F''|.
    double lower_bound = 0.0;
    double argmin = 0.0;
    bool empty_profile = false;
};

/// min over the circle of |F'| + |F''|.
MorseBeta morse_beta(const OneDProfile& F);

/// Sup bounds of |F'| + |F''| and of |3F''F'''' - 5F'''^2| over the stored terms.
double p2_scale(const OneDProfile& F);
double p3_scale(const OneDProfile& F);

enum class CriticalKind { min, max, degenerate };
const char* to_string(CriticalKind k);

struct CriticalPoint {
    double xi;
    CriticalKind kind;
    double f2;
};

/// Roots of F' in [0, 2pi), classified by the sign of F''. Throws std::runtime_error if two
/// grid resolutions disagree on the number of roots.
std::vector<CriticalPoint> critical_points(const OneDProfile& F, double tol_degenerate = 1e-8);

struct P3Margin {
    double xi;
    double margin;
};

struct P3Result {
    bool pass = true;
    std::vector<P3Margin> margins;
};

/// |3 F'' F'''' - 5 (F''')^2| at every minimum of F. Throws std::domain_error if F has a
/// degenerate critical point.
P3Result check_P3(const OneDProfile& F, double tol_margin = 1e-10, double tol_degenerate = 1e-8);

struct ModeReport {
    WaveVector k;
    MorseBeta beta;
    std::vector<CriticalPoint> critical;
    bool p2_pass = false;
    bool p3_checked = false;
    P3Result p3;
    std::string error;
};

struct ClassReport {
    double delta = 0.0;
    double K_cut = 0.0;
    double c_K = 0.0;
    double tol_beta = 0.0;
    double tol_margin = 0.0;
    double norm = 0.0;
    P1Result p1;
    std::vector<ModeReport> modes;
    bool p2_pass = false;
    bool p3_pass = false;
    bool verdict = false;
    std::string note;

    int failure_count() const;
};

/// (P1)-(P3) at a single delta.
ClassReport check_class(const FourierPotential& f, double delta, const ClassConfig& cfg = {});

/// Runs check_class over delta_grid; returns the passing report with the largest delta, or the
/// report with the fewest failures (ties to the larger delta).
ClassReport classify(const FourierPotential& f, std::span<const double> delta_grid, const ClassConfig& cfg = {});

nlohmann::json report_to_json(const ClassReport& r);

/// f_k that gives F = 2Re(f_k e^{i xi}) + G a degenerate critical point at xi0.
Complex critical_curve_P2(const OneDProfile& G, double xi0);

struct P3CurvePoint {
    Complex zeta;
    /// xi is a nondegenerate minimum of the resulting F.
    bool is_minimum;
};

/// f_k values (0, 1 or 2) for which 3F''F'''' = 5(F''')^2 and F' = 0 at xi.
std::vector<P3CurvePoint> critical_curve_P3(const OneDProfile& G, double xi);

struct ModeChange {
    WaveVector k;
    Complex before;
    Complex after;
    std::string reason;
};

struct RepairResult {
    FourierPotential potential;
    double delta;
    double K_cut;
    std::vector<ModeChange> changes;
};

/// Moves f into the open set P_s' at distance <= theta: delta = theta/4, high modes lifted to
/// delta e^{-|k|s} (tail Floor(delta)), low modes failing (P2)/(P3) pushed off the critical curves
/// within theta e^{-|k|s}. Throws std::runtime_error if a low mode cannot be moved within budget.
RepairResult repair_to_Ps_prime(const FourierPotential& f, double theta, const ClassConfig& cfg = {});

} // namespace kam
