#include "kam/random_potentials.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace kam {

const char* to_string(MeasureKind k) { return k == MeasureKind::mu_s ? "mu_s" : "nu_s"; }

MeasureKind measure_kind_from_string(const std::string& name) {
    if (name == "mu_s" || name == "mu") return MeasureKind::mu_s;
    if (name == "nu_s" || name == "nu") return MeasureKind::nu_s;
    throw std::invalid_argument("unknown measure '" + name + "' (expected mu_s or nu_s)");
}

int default_K_max(double s) {
    if (!(s > 0)) throw std::invalid_argument("default_K_max: s must be positive");
    return std::max(1, static_cast<int>(std::ceil(std::log(1e12) / s - 1e-12)));
}

int resolved_K_max(const MeasureSpec& spec) { return spec.K_max > 0 ? spec.K_max : default_K_max(spec.s); }

FourierPotential sample(const MeasureSpec& spec, std::uint64_t draw) {
    if (spec.n < 1) throw std::invalid_argument("sample: n must be >= 1");
    if (!(spec.s > 0)) throw std::invalid_argument("sample: s must be positive");
    const int K = resolved_K_max(spec);
    SplitMix64 rng(derive_seed(spec.seed, draw));
    FourierPotential::ModeMap modes;
    for (auto& k : sharp_vectors(spec.n, K)) {
        // area-correct radius law: P(r < x) = x^2
        const double u = rng.uniform(), phi = 2 * std::numbers::pi * rng.uniform();
        double r = std::sqrt(u);
        if (spec.kind == MeasureKind::nu_s) r /= k.l1();
        modes.emplace(k, std::polar(r * std::exp(-k.l1() * spec.s), phi));
    }
    return FourierPotential(spec.n, spec.s, std::move(modes), Tail::zero(), K);
}

double p1_mode_probability(const WaveVector& k, double delta, int n) {
    return std::min(1.0, delta * delta * std::pow(k.l1(), -(n + 3.0)));
}

P1FailureEstimate p1_failure_probability(double delta, const MeasureSpec& spec, std::size_t N,
                                         const ClassConfig& cfg, unsigned threads) {
    if (spec.kind != MeasureKind::mu_s) throw std::invalid_argument("p1_failure_probability: needs a mu_s spec");
    if (!(delta >= 0 && delta < 1)) throw std::invalid_argument("p1_failure_probability: delta must be in [0, 1)");
    P1FailureEstimate r;
    r.delta = delta;
    r.draws = N;
    if (delta == 0) {
        r.K_cut = std::numeric_limits<double>::infinity();
        r.interval = wilson_interval(0, N);
        return r;
    }
    const int K = resolved_K_max(spec);
    const double c_K = resolved_c_K(cfg, spec.n);
    r.K_cut = cutoff_K(delta, spec.s, c_K);
    if (K <= r.K_cut)
        throw std::invalid_argument("p1_failure_probability: K_max = " + std::to_string(K) +
                                    " does not exceed K_s(delta) = " + std::to_string(r.K_cut));

    double log_survive = 0.0;
    for (auto& k : star_vectors(spec.n, K, static_cast<int>(std::floor(r.K_cut)) + 1)) {
        const double p = p1_mode_probability(k, delta, spec.n);
        ++r.testable_modes;
        r.union_sum += p;
        log_survive += std::log1p(-p);
    }
    r.exact = -std::expm1(log_survive);
    r.c_n = r.union_sum / (delta * delta);

    std::atomic<std::size_t> fails{0};
    parallel_for(N, threads, [&](std::size_t i) {
        if (!check_P1(sample(spec, i), delta, c_K).pass) fails.fetch_add(1, std::memory_order_relaxed);
    });
    r.failures = fails.load();
    if (N > 0) {
        r.fraction = static_cast<double>(r.failures) / N;
        r.sigma = std::sqrt(r.union_sum * (1 - std::min(1.0, r.union_sum)) / N);
    }
    r.interval = wilson_interval(r.failures, N);
    return r;
}

ClassEstimate class_probability(double delta, const MeasureSpec& spec, std::size_t N, const ClassConfig& cfg,
                                unsigned threads, const std::optional<FourierPotential>& translate) {
    if (!(delta > 0 && delta < 1)) throw std::invalid_argument("class_probability: delta must be in (0, 1)");
    ClassEstimate r;
    r.delta = delta;
    r.draws = N;
    std::atomic<std::size_t> in{0}, f1{0}, f2{0}, f3{0};
    parallel_for(N, threads, [&](std::size_t i) {
        FourierPotential f = sample(spec, i);
        if (translate) f = sum(f, *translate);
        const ClassReport rep = check_class(f, delta, cfg);
        if (rep.verdict) in.fetch_add(1, std::memory_order_relaxed);
        if (!rep.p1.pass) f1.fetch_add(1, std::memory_order_relaxed);
        if (!rep.p2_pass) f2.fetch_add(1, std::memory_order_relaxed);
        if (rep.p2_pass && !rep.p3_pass) f3.fetch_add(1, std::memory_order_relaxed);
    });
    r.in_class = in;
    r.p1_failures = f1;
    r.p2_failures = f2;
    r.p3_failures = f3;
    if (N > 0) r.fraction = static_cast<double>(r.in_class) / N;
    r.interval = wilson_interval(r.in_class, N);
    return r;
}

} // namespace kam
