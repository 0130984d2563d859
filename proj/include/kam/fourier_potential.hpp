#pragma once

#include "kam/wave_vector.hpp"

#include <complex>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace kam {

using Complex = std::complex<double>;

/// Rule for the Fourier coefficients of star modes that are not stored explicitly.
struct Tail {
    enum class Kind { zero, floor };
    Kind kind = Kind::zero;
    /// Floor: |f_k| = delta0 * exp(-|k| s), phase 0, on every unlisted star k.
    double delta0 = 0.0;

    static Tail zero() { return {}; }
    static Tail floor(double delta0) { return {Kind::floor, delta0}; }
    bool operator==(const Tail&) const = default;
};

/// Real-analytic zero-average potential on T^n, stored by its coefficients on sharp modes.
/// The coefficient at -k is the conjugate of the one at k.
class FourierPotential {
public:
    using ModeMap = std::map<WaveVector, Complex>;

    FourierPotential(int n, double s, ModeMap modes = {}, Tail tail = {},
                     std::optional<int> k_max = std::nullopt);

    int dim() const { return n_; }
    double width() const { return s_; }
    const Tail& tail() const { return tail_; }
    const ModeMap& modes() const { return modes_; }
    /// Set on sampled potentials: modes with |k| > k_max were not drawn (treated as unknown by
    /// the class checks, as zero by evaluation).
    std::optional<int> k_max() const { return k_max_; }

    bool is_stored(const WaveVector& k) const { return modes_.count(k) != 0; }
    /// f_k for any nonzero k (conjugation and tail applied).
    Complex coefficient(const WaveVector& k) const;
    /// Value the tail assigns at k (zero for non-star k).
    Complex tail_coefficient(const WaveVector& k) const;

    FourierPotential with_mode(const WaveVector& k, Complex value) const;
    FourierPotential with_tail(Tail tail) const;
    FourierPotential without_k_max() const;

private:
    int n_;
    double s_;
    ModeMap modes_;
    Tail tail_;
    std::optional<int> k_max_;
};

/// |f|_s = sup |f_k| e^{|k| s}, including the tail level.
double norm_s(const FourierPotential& f);

/// c * f; a Floor tail is rescaled to Floor(|c| delta0) only for c >= 0.
FourierPotential scaled(const FourierPotential& f, double c);

/// f + g. Tails add when both are Floor; unlisted modes of one side pick up its tail value.
FourierPotential sum(const FourierPotential& f, const FourierPotential& g);

/// Projection of f on the line {j k : j != 0}: F(xi) = sum_{j != 0} F_j e^{i j xi}, F_{-j} = conj(F_j).
class OneDProfile {
public:
    OneDProfile() = default;
    /// coeffs[j-1] = F_j for j = 1..J.
    explicit OneDProfile(std::vector<Complex> coeffs, WaveVector base = WaveVector{1}, double width = 0.0,
                         double envelope = 0.0);

    /// a cos(j xi) + b sin(j xi) terms.
    struct Term {
        int j;
        double cos_amp;
        double sin_amp;
    };
    static OneDProfile from_terms(std::span<const Term> terms);
    static OneDProfile from_terms(std::initializer_list<Term> terms);

    const WaveVector& base() const { return base_; }
    double width() const { return width_; }
    /// Unlisted F_j with j > degree() are bounded by envelope * exp(-j width).
    double envelope() const { return envelope_; }
    int degree() const { return static_cast<int>(coeffs_.size()); }
    Complex coefficient(int j) const;
    const std::vector<Complex>& coefficients() const { return coeffs_; }
    bool is_zero() const;

    /// d-th derivative, d in 0..4.
    double eval(double xi, int d = 0) const;
    /// (F'(xi), F''(xi)) in one pass.
    std::pair<double, double> slope_curvature(double xi) const;
    /// F^{(d)}(a + v) - F^{(d)}(a) without cancellation for small v.
    double difference(double a, double v, int d = 0) const;
    /// 2 sum_j j^d |F_j|: sup bound on |F^{(d)}| over the stored terms.
    double derivative_bound(int d) const;
    /// Bound on the contribution of unlisted terms to F^{(d)}.
    double truncation_bound(int d) const;

    /// Profile with F_1 removed (the G of the critical-curve construction).
    OneDProfile without_fundamental() const;
    OneDProfile with_fundamental(Complex f1) const;
    OneDProfile scaled(double c) const;

private:
    WaveVector base_{1};
    std::vector<Complex> coeffs_;
    double width_ = 0.0;
    double envelope_ = 0.0;
};

struct ProfileValue {
    double value;
    double truncation_bound;
};

/// Rejects d > 4.
ProfileValue eval_profile(const OneDProfile& F, double xi, int d);

/// Profile of f along the star vector k_star (tail included on j = 1).
OneDProfile profile_of(const FourierPotential& f, const WaveVector& k_star);

/// One profile per star class that carries a stored coefficient.
std::map<WaveVector, OneDProfile> decompose(const FourierPotential& f);

/// Dense list of modes used for evaluation: stored modes plus tail modes with |k| <= k_eval.
struct EvaluationModel {
    int n = 0;
    std::vector<WaveVector> k;
    std::vector<Complex> c;
    /// Sup bound of the omitted tail on f.
    double truncation_bound = 0.0;
    /// Sup bound of the omitted tail on each component of grad f.
    double gradient_truncation_bound = 0.0;
    int max_component = 0;
};

EvaluationModel evaluation_model(const FourierPotential& f, int k_eval = 0);

struct PotentialValue {
    double value;
    double truncation_bound;
};

/// Floor tails require k_eval > 0.
PotentialValue eval(const FourierPotential& f, std::span<const double> x, int k_eval = 0);
double eval(const EvaluationModel& model, std::span<const double> x);
/// grad f at x, written to out (size n).
void gradient(const EvaluationModel& model, std::span<const double> x, std::span<double> out);

} // namespace kam
