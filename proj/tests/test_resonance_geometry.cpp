#include "kam/resonance_geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

using namespace kam;

TEST_CASE("resonant_modes") {
    auto m1 = resonant_modes(std::exp(-1.0), 2);
    CHECK(std::set<WaveVector>(m1.begin(), m1.end()) == std::set<WaveVector>{{1, 0}, {0, 1}});
    auto m2 = resonant_modes(std::exp(-std::sqrt(2.0)), 2);
    CHECK(std::set<WaveVector>(m2.begin(), m2.end()) == std::set<WaveVector>{{1, 0}, {0, 1}, {1, 1}, {1, -1}});
    CHECK(m2.size() == 4);

    auto m = resonant_modes(1e-2, 3);
    std::set<WaveVector> seen(m.begin(), m.end());
    CHECK(seen.size() == m.size());
    for (const auto& k : m) {
        CHECK(k.is_star());
        CHECK(seen.count(-k) == 0);
        CHECK(k.l1() <= std::pow(std::log(1e-2), 2));
    }
    // brute-force oracle: count primitive sharp vectors in the l1 ball
    const int cut = static_cast<int>(std::pow(std::log(1e-2), 2));
    std::size_t brute = 0;
    for (int a = -cut; a <= cut; ++a)
        for (int b = -cut; b <= cut; ++b)
            for (int c = -cut; c <= cut; ++c) {
                if (std::abs(a) + std::abs(b) + std::abs(c) > cut || (a == 0 && b == 0 && c == 0)) continue;
                const int first = a != 0 ? a : b != 0 ? b : c;
                if (first < 0) continue;
                if (std::gcd(std::gcd(std::abs(a), std::abs(b)), std::abs(c)) != 1) continue;
                ++brute;
            }
    CHECK(m.size() == brute);
    CHECK_THROWS_AS(resonant_modes(1e-30, 4, 2.0, 1000), std::length_error);
    CHECK_THROWS_AS(resonant_modes(1.5, 2), std::invalid_argument);
}

TEST_CASE("zone_width") {
    CHECK(default_width_exponent(2) == 10.0);
    CHECK(zone_width(std::exp(-1.0), 2, 0.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(zone_width(1e-3, 2) == doctest::Approx(std::sqrt(1e-3) * std::pow(std::log(1e3), 10)).epsilon(1e-14));
    // 0.031623 * 6.9078^10 = 7.82e6
    CHECK(zone_width(1e-3, 2) == doctest::Approx(7.823e6).epsilon(1e-3));
}

TEST_CASE("classify_point") {
    ZoneDecomposition z{0.1, 2, resonant_modes(std::exp(-std::sqrt(2.0)), 2), 1e-3};
    std::vector<double> origin{0, 0};
    CHECK(z.classify(origin).zone == Zone::B2);

    std::vector<double> on_one{1.0, 0.0};  // y.(0,1) = 0, others >= 1
    auto p = z.classify(on_one);
    CHECK(p.zone == Zone::B1);
    CHECK(z.modes[p.mode] == WaveVector{0, 1});

    std::vector<double> generic{1.0, (1 + std::sqrt(5.0)) / 2};
    auto g = z.classify(generic);
    CHECK(g.zone == Zone::B0);
    double oracle = INFINITY;
    for (const auto& k : z.modes) oracle = std::min(oracle, std::abs(k.dot(generic)));
    CHECK(g.margin == oracle);

    // ties are resonant
    ZoneDecomposition t{0.1, 2, {WaveVector{1, 0}}, 0.5};
    std::vector<double> edge{0.5, 0.3};
    CHECK(t.classify(edge).zone == Zone::B1);
}

TEST_CASE("zone_measures") {
    auto B = ActionRegion::cube(2, 0.0, 1.0);
    ZoneDecomposition zero{0.1, 2, resonant_modes(std::exp(-std::sqrt(2.0)), 2), 0.0};
    auto m0 = zone_measures(zero, B, 2000, 1);
    CHECK(m0.fraction[0] == 1.0);

    ZoneDecomposition wide{0.1, 2, zero.modes, 10.0};
    CHECK(zone_measures(wide, B, 2000, 1).fraction[2] == 1.0);

    // slab oracle: |{y in [0,1]^2 : |y1| <= w}| = w
    const double w = 0.3;
    ZoneDecomposition slab{0.1, 2, {WaveVector{1, 0}}, w};
    const std::size_t N = 20000;
    auto ms = zone_measures(slab, B, N, 9);
    const double sigma = std::sqrt(w * (1 - w) / N);
    CHECK(std::abs(ms.fraction[1] - w) < 3 * sigma);
    CHECK(ms.interval[1].lo <= ms.fraction[1]);
    CHECK(ms.fraction[0] + ms.fraction[1] + ms.fraction[2] == doctest::Approx(1.0));

    // thread count does not change the result
    auto mt = zone_measures(slab, B, N, 9, 4);
    CHECK(mt.count[1] == ms.count[1]);
}

TEST_CASE("zones: partition and monotonicity in width") {
    auto B = ActionRegion::cube(2, -1.0, 1.0);
    auto modes = resonant_modes(std::exp(-2.0), 2);
    for (std::uint64_t i = 0; i < 2000; ++i) {
        std::vector<double> y(2);
        sample_point(B, 3, i, y);
        Zone prev = Zone::B0;
        for (double w : {0.0, 0.01, 0.05, 0.2, 1.0}) {
            ZoneDecomposition z{0.1, 2, modes, w};
            auto p = z.classify(y);
            int inside = 0;
            for (const auto& k : modes) inside += std::abs(k.dot(y)) <= w;
            CHECK(p.zone == (inside == 0 ? Zone::B0 : inside == 1 ? Zone::B1 : Zone::B2));
            CHECK(static_cast<int>(p.zone) >= static_cast<int>(prev));
            prev = p.zone;
        }
    }
}

TEST_CASE("B2 scaling probe") {
    // modes (1,0),(0,1); B = [-0.01,0.01]^2; width exponent w_e = 1
    const double we = 1.0;
    ZoneConfig cfg{we, 0.0};
    auto B = ActionRegion::cube(2, -0.01, 0.01);
    const double e1 = 1e-8, e2 = 1e-7;
    auto z1 = make_zones(e1, 2, cfg), z2 = make_zones(e2, 2, cfg);
    REQUIRE(z1.modes.size() == 2);
    REQUIRE(z2.width < 0.01);
    const std::size_t N = 200000;
    const double f1 = zone_measures(z1, B, N, 5).fraction[2], f2 = zone_measures(z2, B, N, 6).fraction[2];
    const double slope = std::log(f2 / f1) / std::log(e2 / e1);
    auto model = [&](double e) { return e * std::pow(std::abs(std::log(e)), 2 * we + 2); };
    const double theory = std::log(model(e2) / model(e1)) / std::log(e2 / e1);
    CHECK(std::abs(slope - theory) < 0.2);
}
