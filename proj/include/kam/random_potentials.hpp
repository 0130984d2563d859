#pragma once

#include "kam/class_membership.hpp"
#include "kam/fourier_potential.hpp"
#include "kam/stats.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace kam {

/// mu_s: z_k uniform on the unit disk. nu_s: z_k uniform on the disk of radius 1/|k|.
enum class MeasureKind { mu_s, nu_s };

const char* to_string(MeasureKind k);
MeasureKind measure_kind_from_string(const std::string& name);

struct MeasureSpec {
    MeasureKind kind = MeasureKind::mu_s;
    int n = 2;
    double s = 1.0;
    /// Sampled modes have |k| <= K_max; <= 0 selects default_K_max(s).
    int K_max = 0;
    std::uint64_t seed = 0;
};

/// Smallest K with e^{-K s} <= 1e-12.
int default_K_max(double s);
int resolved_K_max(const MeasureSpec& spec);

/// Draw number `draw` of the run: f_k = z_k e^{-|k| s} on every sharp |k| <= K_max, zero tail,
/// k_max recorded. Depends only on (spec, draw).
FourierPotential sample(const MeasureSpec& spec, std::uint64_t draw = 0);

/// Per-mode probability that |z_k| < delta |k|^{-(n+3)/2} under mu_s.
double p1_mode_probability(const WaveVector& k, double delta, int n);

struct P1FailureEstimate {
    double delta = 0.0;
    double K_cut = 0.0;
    std::size_t draws = 0;
    std::size_t failures = 0;
    double fraction = 0.0;
    /// Binomial standard error at the analytic union sum.
    double sigma = 0.0;
    Interval interval{0.0, 1.0};
    /// Star modes with K_cut < |k| <= K_max.
    std::size_t testable_modes = 0;
    /// sum over testable modes of delta^2 |k|^{-(n+3)}.
    double union_sum = 0.0;
    /// 1 - prod (1 - p_k): exact failure probability under independence.
    double exact = 0.0;
    /// c with union_sum = c delta^2.
    double c_n = 0.0;
};

/// Monte Carlo (P1) failure rate over N mu_s draws. delta = 0 gives zero failures without sampling;
/// throws std::invalid_argument if K_max <= K_s(delta) or spec is nu_s.
P1FailureEstimate p1_failure_probability(double delta, const MeasureSpec& spec, std::size_t N,
                                         const ClassConfig& cfg = {}, unsigned threads = 0);

struct ClassEstimate {
    double delta = 0.0;
    std::size_t draws = 0;
    std::size_t in_class = 0;
    std::size_t p1_failures = 0;
    std::size_t p2_failures = 0;
    std::size_t p3_failures = 0;
    double fraction = 0.0;
    Interval interval{0.0, 1.0};
};

/// Fraction of draws (optionally translated by g) that satisfy (P1)-(P3) at delta.
ClassEstimate class_probability(double delta, const MeasureSpec& spec, std::size_t N, const ClassConfig& cfg = {},
                                unsigned threads = 0, const std::optional<FourierPotential>& translate = std::nullopt);

} // namespace kam
