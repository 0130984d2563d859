#pragma once

#include "kam/class_membership.hpp"
#include "kam/fourier_potential.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace kam {

enum class ComponentKind { libration, rotation_upper, rotation_lower };
/// min: bottom of a well; max: a separatrix level; flat: lower edge of the free rotor (F = 0).
enum class EdgeType { min_edge, max_edge, infinity, flat };

const char* to_string(ComponentKind k);
const char* to_string(EdgeType e);

/// Open connected component of {E in (e_a, e_b)} for E = eta^2/2 + F(xi).
struct PhaseComponent {
    int id = 0;
    ComponentKind kind = ComponentKind::libration;
    double e_a = 0.0;
    double e_b = std::numeric_limits<double>::infinity();
    EdgeType edge_a = EdgeType::min_edge;
    EdgeType edge_b = EdgeType::max_edge;
    /// Arc [arc_lo, arc_hi] (unwrapped, length <= 2pi) whose end points are the bounding maxima.
    /// Rotations use a full turn starting at the global maximum.
    double arc_lo = 0.0;
    double arc_hi = 0.0;
    /// Critical points strictly inside the arc, unwrapped and increasing.
    std::vector<double> interior;
    int minima = 0;
};

/// Merge tree of the sublevel sets of F. A Morse F with m minima gives 2m + 1 components
/// (m - 1 when equal maxima produce empty bands). Throws std::domain_error on degenerate F.
std::vector<PhaseComponent> component_graph(const OneDProfile& F, double tol_degenerate = 1e-8);

/// p = (1/2pi) \oint eta dxi. E may sit on a finite edge.
double action_of_energy(const OneDProfile& F, const PhaseComponent& c, double E);
/// T = \oint dxi / sqrt(2(E - F)), E strictly inside the component.
double period(const OneDProfile& F, const PhaseComponent& c, double E);

struct OrbitQuantities {
    double E = 0.0;
    double p = 0.0;
    double T = 0.0;
    double omega = 0.0;
    /// dT/dE by differentiation under the integral.
    double dT = 0.0;
    /// E''(p) = omega d(omega)/dE = -(2pi)^2 T' / T^3.
    double E2 = 0.0;
};

OrbitQuantities orbit_quantities(const OneDProfile& F, const PhaseComponent& c, double E);

/// E''(p) from Richardson-extrapolated central differences of omega(E) with step h.
double second_derivative_fd(const OneDProfile& F, const PhaseComponent& c, double E, double h);

struct ProfileSample {
    double E;
    double p;
    double omega;
    double E2;
    /// Finite-difference E'' (NaN where not computed).
    double E2_fd;
    /// Outside the theta-collars of the finite edges.
    bool valid;
};

struct ProfileOptions {
    /// Uniform interior samples.
    int uniform = 24;
    /// Geometric refinement (ratio 1/2) toward each finite edge stops at this gap relative to osc(F).
    double min_gap = 1e-9;
    /// Collar half-width in energy at finite edges.
    double theta = 0.0;
    /// Rotations are tabulated on (e_a, e_a + span]; <= 0 selects max(2, 4 osc F).
    double rotation_span = 0.0;
    /// Cross-check E'' by finite differences where the edge gap exceeds this fraction of osc(F).
    double fd_gap = 1e-3;
};

/// E(p) on a graded energy grid with omega and E''.
class ActionProfile {
public:
    ActionProfile(PhaseComponent component, std::vector<ProfileSample> samples, double fd_disagreement);

    const PhaseComponent& component() const { return comp_; }
    const std::vector<ProfileSample>& samples() const { return samples_; }
    /// Largest relative |E2 - E2_fd| over the samples where both exist.
    double fd_disagreement() const { return fd_disagreement_; }
    double p_min() const { return samples_.front().p; }
    double p_max() const { return samples_.back().p; }

    struct Value {
        double E;
        double omega;
        double E2;
    };
    /// Hermite interpolation in p. Throws std::out_of_range outside [p_min, p_max].
    Value at(double p) const;

private:
    PhaseComponent comp_;
    std::vector<ProfileSample> samples_;
    double fd_disagreement_;
};

/// Throws std::runtime_error if the tabulated p(E) is not increasing or omega <= 0.
ActionProfile energy_of_action(const OneDProfile& F, const PhaseComponent& c, const ProfileOptions& opt = {});

struct KolmogorovMargin {
    double bad_measure = 0.0;
    double valid_measure = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

/// meas{p in the valid range : |E''(p)| < theta^c_exp}; pass iff <= theta.
KolmogorovMargin kolmogorov_margin(const OneDProfile& F, const ActionProfile& profile, double theta, double c_exp);

/// meas{(eta, xi) : |eta^2/2 + F(xi) - E0| <= theta} by exact fiber integration.
double critical_band_measure(const OneDProfile& F, double E0, double theta);

/// meas{x in [x1, x2] : |g(x)| <= theta}. Throws std::invalid_argument if g vanishes on a subinterval.
double level_set_measure(const std::function<double(double)>& g, double x1, double x2, double theta,
                         int cells = 4096);

/// Bottom-of-well limit of E'': (3 F'' F'''' - 5 F'''^2) / (24 F''^2) at the minimum xi.
double min_edge_E2(const OneDProfile& F, double xi);

} // namespace kam
