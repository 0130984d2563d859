#include "doctest.h"

#include "kam/random_potentials.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

using namespace kam;

namespace {

MeasureSpec mu(int n = 2, double s = 1.0, int K_max = 0, std::uint64_t seed = 7) {
    return {MeasureKind::mu_s, n, s, K_max, seed};
}

// z_k recovered from a sampled coefficient
Complex unit_coordinate(const FourierPotential& f, const WaveVector& k) {
    return f.coefficient(k) * std::exp(k.l1() * f.width());
}

} // namespace

TEST_CASE("sampler: truncation and determinism") {
    CHECK(default_K_max(1.0) == 28);
    CHECK(std::exp(-default_K_max(0.5) * 0.5) <= 1e-12);

    const auto spec = mu(2, 1.0, 6, 11);
    const auto a = sample(spec, 3), b = sample(spec, 3), c = sample(spec, 4);
    REQUIRE(a.k_max() == 6);
    CHECK(a.modes().size() == sharp_vectors(2, 6).size());
    CHECK(a.modes() == b.modes());
    CHECK(a.modes() != c.modes());
    CHECK(a.tail() == Tail::zero());

    auto other = spec;
    other.seed = 12;
    CHECK(sample(other, 3).modes() != a.modes());
}

TEST_CASE("sampler: support of mu_s and nu_s") {
    for (std::uint64_t d = 0; d < 200; ++d) {
        const auto f = sample(mu(3, 0.7, 5, 1), d);
        CHECK(norm_s(f) <= 1.0);
        const auto g = sample({MeasureKind::nu_s, 3, 0.7, 5, 1}, d);
        for (const auto& [k, v] : g.modes()) CHECK(std::abs(v) * std::exp(k.l1() * 0.7) <= 1.0 / k.l1() + 1e-15);
    }
}

TEST_CASE("sampler: uniform-disk moments and radial law") {
    const int N = 10000;
    const WaveVector k{1, 0}, k2{2, -3};
    double m2 = 0.0;
    int small = 0;
    double m2_nu = 0.0;
    std::vector<double> phases;
    for (int d = 0; d < N; ++d) {
        const auto z = unit_coordinate(sample(mu(2, 1.0, 6, 99), d), k);
        m2 += std::norm(z);
        if (std::abs(unit_coordinate(sample(mu(2, 1.0, 6, 99), d), k2)) < 0.1) ++small;
        phases.push_back(std::fmod(std::arg(z) + 2 * std::numbers::pi, 2 * std::numbers::pi));
        m2_nu += std::norm(unit_coordinate(sample({MeasureKind::nu_s, 2, 1.0, 6, 99}, d), k2) * 5.0);
    }
    // E|z|^2 = 1/2, Var |z|^2 = 1/3 - 1/4
    const double sd = std::sqrt(1.0 / 12 / N);
    CHECK(std::abs(m2 / N - 0.5) < 3 * sd);
    CHECK(std::abs(m2_nu / N - 0.5) < 3 * sd);
    // P(|z| < 0.1) = 0.01
    CHECK(std::abs(small / double(N) - 0.01) < 3 * std::sqrt(0.01 * 0.99 / N));

    // Kolmogorov-Smirnov on the phase at the 1% level
    std::sort(phases.begin(), phases.end());
    double D = 0.0;
    for (int i = 0; i < N; ++i) {
        const double cdf = phases[i] / (2 * std::numbers::pi);
        D = std::max({D, (i + 1.0) / N - cdf, cdf - double(i) / N});
    }
    CHECK(D < 1.6276 / std::sqrt(double(N)));
}

TEST_CASE("p1 failure: edge cases") {
    const auto z = p1_failure_probability(0.0, mu(), 100);
    CHECK(z.failures == 0);
    CHECK(z.fraction == 0.0);
    CHECK_THROWS_AS(p1_failure_probability(0.1, {MeasureKind::nu_s, 2, 1.0, 0, 1}, 10), std::invalid_argument);
    // K_s(0.1) = 2 ln 40 = 7.38 with c_K = 2n
    CHECK_THROWS_AS(p1_failure_probability(0.1, mu(2, 1.0, 7), 10), std::invalid_argument);
    CHECK_NOTHROW(p1_failure_probability(0.1, mu(2, 1.0, 8), 10));
}

TEST_CASE("p1 failure: analytic sums against an independent count") {
    ClassConfig cfg;
    const double delta = 0.1;
    const auto r = p1_failure_probability(delta, mu(2, 1.0, 0), 0, cfg);
    const double K = 2.0 * std::log(4.0 / delta);
    double sum = 0.0;
    std::size_t count = 0;
    for (int a = -40; a <= 40; ++a)
        for (int b = -40; b <= 40; ++b) {
            const int l1 = std::abs(a) + std::abs(b);
            if (l1 <= K || l1 > 28 || std::gcd(a, b) != 1) continue;
            if (a < 0 || (a == 0 && b < 0)) continue;
            ++count;
            sum += delta * delta * std::pow(l1, -5.0);
        }
    CHECK(r.testable_modes == count);
    CHECK(r.union_sum == doctest::Approx(sum).epsilon(1e-12));
    CHECK(r.exact <= r.union_sum);
    // sum over every star k of |k|^{-5} <= sum_m 2m m^{-5} = 2 zeta(4)
    CHECK(r.c_n < 2 * std::pow(std::numbers::pi, 4) / 90);
}

TEST_CASE("p1 failure: Monte Carlo against the union bound") {
    // c_K = 1 makes every mode testable and the failure rate visible
    ClassConfig cfg;
    cfg.c_K = 1.0;
    const auto spec = mu(2, 1.0, 6, 2024);
    for (double delta : {0.3, 0.6}) {
        const std::size_t N = 4000;
        const auto r = p1_failure_probability(delta, spec, N, cfg, 4);
        const double sd = std::sqrt(r.exact * (1 - r.exact) / N);
        CHECK(std::abs(r.fraction - r.exact) < 3 * sd);
        CHECK(r.fraction <= r.union_sum + 3 * sd);
        CHECK(r.interval.lo <= r.fraction);
        CHECK(r.interval.hi >= r.fraction);
    }
    const auto a = p1_failure_probability(0.5, spec, 500, cfg, 1);
    const auto b = p1_failure_probability(0.5, spec, 500, cfg, 8);
    CHECK(a.failures == b.failures);
}

TEST_CASE("class probability: measure-zero (P2)/(P3) failures and the delta trend") {
    const auto spec = mu(2, 1.0, 0, 31);
    const auto r = class_probability(0.1, spec, 1000, {}, 0);
    CHECK(r.p2_failures == 0);
    CHECK(r.p3_failures == 0);

    ClassConfig cfg;
    cfg.c_K = 1.0;
    const auto small = mu(2, 1.0, 6, 31);
    double prev = -1.0;
    for (double delta : {0.6, 0.3, 0.15}) {
        const auto c = class_probability(delta, small, 1500, cfg, 0);
        CHECK(c.p2_failures == 0);
        const double sd = std::sqrt(0.25 / c.draws);
        CHECK(c.fraction >= prev - 3 * sd);
        prev = c.fraction;
    }
    CHECK(prev > 0.9);
}

TEST_CASE("class probability: translated set is not smaller") {
    ClassConfig cfg;
    cfg.c_K = 1.0;
    const auto spec = mu(2, 1.0, 5, 77);
    const double s = 1.0;
    FourierPotential::ModeMap g;
    g[WaveVector{1, 0}] = 0.6 * std::exp(-s);
    g[WaveVector{0, 1}] = Complex(0.0, 0.5) * std::exp(-s);
    g[WaveVector{1, 1}] = 0.4 * std::exp(-2 * s);
    const FourierPotential shift(2, s, g);
    REQUIRE(norm_s(shift) <= 1.0);
    const std::size_t N = 2000;
    const auto base = class_probability(0.9, spec, N, cfg, 0);
    const auto moved = class_probability(0.9, spec, N, cfg, 0, shift);
    const double sd = std::sqrt(2 * 0.25 / N);
    CHECK(moved.fraction >= base.fraction - 3 * sd);
    CHECK(base.fraction < 0.5);
    MESSAGE("in class: " << base.fraction << " -> translated " << moved.fraction);
}
