#include "kam/class_membership.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace kam;
using std::numbers::pi;

namespace {

// dense-grid oracle for min |F'| + |F''|
double brute_beta(const OneDProfile& F, int samples = 400000) {
    double best = 1e300;
    for (int i = 0; i < samples; ++i) {
        const double xi = 2 * pi * i / samples;
        best = std::min(best, std::abs(F.eval(xi, 1)) + std::abs(F.eval(xi, 2)));
    }
    return best;
}

int brute_sign_changes(const OneDProfile& F, int samples = 200000) {
    int n = 0;
    double prev = F.eval(0.0, 1);
    for (int i = 1; i <= samples; ++i) {
        const double v = F.eval(2 * pi * i / samples + 1e-3, 1);
        if ((v > 0) != (prev > 0)) ++n;
        prev = v;
    }
    return n;
}

OneDProfile random_G(std::mt19937_64& rng, int degree = 4) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Complex> c(degree);
    for (int j = 2; j <= degree; ++j) c[j - 1] = Complex(u(rng), u(rng)) * std::exp(-0.5 * j);
    return OneDProfile(std::move(c));
}

} // namespace

TEST_CASE("cutoff_K") {
    CHECK(cutoff_K(3.0 / std::exp(1.0), 2.0, 3.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cutoff_K(0.01, 1.0, 2.0) == doctest::Approx(2.0 * std::log(200.0)).epsilon(1e-15));
    CHECK(cutoff_K(0.01, 1.0, 2.0) == doctest::Approx(10.597).epsilon(1e-4));
    double prev = 0;
    for (double d = 0.5; d > 1e-12; d /= 10) {
        const double k = cutoff_K(d, 1.0, 2.0);
        CHECK(k > prev);
        prev = k;
    }
    CHECK_THROWS_AS(cutoff_K(2.0, 1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(cutoff_K(3.0, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("check_P1") {
    const double delta = 0.1, s = 1.0, c_K = 4.0;
    // floor tail at delta, stored modes at amplitude e^{-|k|s}
    FourierPotential good(2, s, {{WaveVector{1, 0}, std::exp(-1.0)}, {WaveVector{3, 7}, std::exp(-10.0)}}, Tail::floor(delta));
    CHECK(check_P1(good, delta, c_K).pass);

    FourierPotential trig(2, s, {{WaveVector{1, 0}, 0.5}, {WaveVector{0, 1}, 0.2}});
    auto r = check_P1(trig, delta, c_K);
    CHECK_FALSE(r.pass);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].k.l1() == static_cast<int>(std::floor(cutoff_K(delta, s, c_K))) + 1);
    CHECK(r.violations[0].amplitude == 0.0);

    // |k| = 8 > K = 2 ln 40 = 7.38; threshold 0.1 * 8^{-2.5} e^{-8}
    const double K = cutoff_K(delta, s, c_K);
    REQUIRE(K < 8.0);
    const double thr = 0.1 * std::pow(8.0, -2.5) * std::exp(-8.0);
    CHECK(thr > 1e-9);
    FourierPotential weak(2, s, {{WaveVector{5, 3}, 1e-9}}, Tail::floor(1.0));
    auto rw = check_P1(weak, delta, c_K);
    CHECK_FALSE(rw.pass);
    REQUIRE(rw.violations.size() == 1);
    CHECK(rw.violations[0].k == WaveVector{5, 3});
    CHECK(rw.violations[0].threshold == doctest::Approx(thr).epsilon(1e-14));
    CHECK(check_P1(weak.with_mode(WaveVector{5, 3}, 2 * thr), delta, c_K).pass);

    // floor tail below delta: fails exactly where delta0 < delta m^{-5/2}
    FourierPotential low_tail(2, s, {}, Tail::floor(1e-4));
    auto rl = check_P1(low_tail, delta, c_K);
    CHECK_FALSE(rl.pass);
    for (const auto& v : rl.violations) CHECK(1e-4 < delta * std::pow(v.k.l1(), -2.5));
    const int last_bad = rl.violations.back().k.l1();
    CHECK_FALSE(1e-4 < delta * std::pow(last_bad + 1, -2.5));
}

TEST_CASE("morse_beta") {
    auto cosF = OneDProfile::from_terms({{1, 1.0, 0.0}});
    CHECK(morse_beta(cosF).beta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(brute_beta(cosF) == doctest::Approx(1.0).epsilon(1e-6));
    auto deg = OneDProfile::from_terms({{1, 1.0, 0.0}, {2, 0.25, 0.0}});
    auto bd = morse_beta(deg);
    CHECK(bd.beta < 1e-10);
    CHECK(std::abs(bd.argmin - pi) < 1e-4);
    CHECK(morse_beta(cosF.scaled(2.0)).beta == doctest::Approx(2.0));
    CHECK(morse_beta(OneDProfile{}).empty_profile);
    CHECK(morse_beta(OneDProfile{}).beta == 0.0);

    auto gen = OneDProfile::from_terms({{1, 0.8, 0.1}, {2, 0.1, -0.3}, {3, 0.05, 0.02}});
    auto bg = morse_beta(gen);
    const double oracle = brute_beta(gen);
    CHECK(bg.beta <= oracle + 1e-12);
    // the brute grid overshoots a kinked minimum by at most Lipschitz * h / 2
    CHECK(oracle - bg.beta <= 0.5 * (gen.derivative_bound(2) + gen.derivative_bound(3)) * 2 * pi / 400000);
    CHECK(bg.lower_bound <= bg.beta);

    std::mt19937_64 rng(5);
    for (int t = 0; t < 10; ++t) {
        auto F = random_G(rng).with_fundamental(Complex(0.4, 0.2));
        const double b = morse_beta(F).beta;
        for (double c : {-3.0, 0.5, 2.0}) CHECK(morse_beta(F.scaled(c)).beta == doctest::Approx(std::abs(c) * b).epsilon(1e-8));
    }
}

TEST_CASE("critical_points") {
    auto cps = critical_points(OneDProfile::from_terms({{1, 1.0, 0.0}}));
    REQUIRE(cps.size() == 2);
    CHECK(std::abs(cps[0].xi) < 1e-12);
    CHECK(cps[0].kind == CriticalKind::max);
    CHECK(cps[1].xi == doctest::Approx(pi).epsilon(1e-12));
    CHECK(cps[1].kind == CriticalKind::min);

    auto F = OneDProfile::from_terms({{1, 1.0, 0.0}, {2, 0.0, 0.6}});
    auto c2 = critical_points(F);
    CHECK(static_cast<int>(c2.size()) == brute_sign_changes(F));
    REQUIRE(c2.size() == 4);
    int mins = 0, maxs = 0;
    for (const auto& c : c2) {
        CHECK(std::abs(F.eval(c.xi, 1)) < 1e-12);
        mins += c.kind == CriticalKind::min;
        maxs += c.kind == CriticalKind::max;
    }
    CHECK(mins == 2);
    CHECK(maxs == 2);

    auto deg = OneDProfile::from_terms({{1, 1.0, 0.0}, {2, 0.25, 0.0}});
    auto c3 = critical_points(deg);
    bool flagged = false;
    for (const auto& c : c3)
        if (c.kind == CriticalKind::degenerate) {
            flagged = true;
            CHECK(std::abs(c.xi - pi) < 1e-6);
            CHECK(std::abs(deg.eval(c.xi, 1)) < 1e-10);
            CHECK(std::abs(deg.eval(c.xi, 2)) < 1e-10);
        }
    CHECK(flagged);
}

TEST_CASE("check_P3") {
    auto cosF = OneDProfile::from_terms({{1, 1.0, 0.0}});
    auto r = check_P3(cosF);
    REQUIRE(r.margins.size() == 1);
    CHECK(r.margins[0].margin == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.pass);
    CHECK(check_P3(cosF.scaled(2.0)).margins[0].margin == doctest::Approx(12.0).epsilon(1e-12));

    // oracle: bisection on the signed margin of cos + a cos 2xi at its minimum xi = pi
    auto signed_margin = [](double a) {
        auto F = OneDProfile::from_terms({{1, 1.0, 0.0}, {2, a, 0.0}});
        return 3 * F.eval(pi, 2) * F.eval(pi, 4) - 5 * std::pow(F.eval(pi, 3), 2);
    };
    double lo = 0.0, hi = 0.2;
    REQUIRE(signed_margin(lo) * signed_margin(hi) < 0);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (signed_margin(lo) * signed_margin(mid) <= 0 ? hi : lo) = mid;
    }
    const double a_star = 0.5 * (lo + hi);
    auto bad = OneDProfile::from_terms({{1, 1.0, 0.0}, {2, a_star, 0.0}});
    auto rb = check_P3(bad, 1e-10);
    CHECK_FALSE(rb.pass);
    bool found = false;
    for (const auto& m : rb.margins)
        if (std::abs(m.xi - pi) < 1e-8) {
            found = true;
            CHECK(m.margin < 1e-10);
        }
    CHECK(found);

    CHECK_THROWS_AS(check_P3(OneDProfile::from_terms({{1, 1.0, 0.0}, {2, 0.25, 0.0}})), std::domain_error);

    std::mt19937_64 rng(8);
    for (int t = 0; t < 10; ++t) {
        auto F = random_G(rng, 3).with_fundamental(Complex(0.5, -0.1));
        auto base = check_P3(F);
        for (double c : {0.3, 2.5}) {
            auto sc = check_P3(F.scaled(c));
            REQUIRE(sc.margins.size() == base.margins.size());
            for (std::size_t i = 0; i < sc.margins.size(); ++i)
                CHECK(sc.margins[i].margin == doctest::Approx(c * c * base.margins[i].margin).epsilon(1e-9));
        }
    }
}

TEST_CASE("critical curves") {
    OneDProfile zero;
    for (double xi : {0.0, 1.0, 4.0}) CHECK(std::abs(critical_curve_P2(zero, xi)) == 0.0);
    auto G = OneDProfile::from_terms({{2, 0.25, 0.0}});
    const Complex z = critical_curve_P2(G, pi);
    CHECK(z.real() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(z.imag()) < 1e-14);
    CHECK(std::abs(critical_curve_P2(G, 0.0) - critical_curve_P2(G, 2 * pi)) < 1e-14);
    CHECK_THROWS_AS(critical_curve_P2(OneDProfile::from_terms({{1, 1.0, 0.0}}), 0.0), std::invalid_argument);

    // P3 curve: G = 0 gives zeta = 0 on both branches
    auto z0 = critical_curve_P3(zero, 1.3);
    REQUIRE(z0.size() == 2);
    CHECK(std::abs(z0[0].zeta) == 0.0);
    CHECK(z0[0].zeta == z0[1].zeta);

    // G = cos(2xi)/4 at pi: G' = G''' = 0, G'' = -1, G'''' = 4 -> b = 5/2, c = 4, roots x = -1, -4
    auto z1 = critical_curve_P3(G, pi);
    REQUIRE(z1.size() == 2);
    CHECK(z1[0].zeta.real() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(z1[1].zeta.real() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_FALSE(z1[0].is_minimum);
    CHECK(z1[1].is_minimum);
    auto F = G.with_fundamental(z1[1].zeta);
    auto p3 = check_P3(F, 1e-10);
    CHECK_FALSE(p3.pass);

    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 2 * pi);
    for (int t = 0; t < 20; ++t) {
        auto Gr = random_G(rng);
        const double xi0 = u(rng);
        auto Fd = Gr.with_fundamental(critical_curve_P2(Gr, xi0));
        CHECK(std::abs(Fd.eval(xi0, 1)) < 1e-13);
        CHECK(std::abs(Fd.eval(xi0, 2)) < 1e-13);
        CHECK(morse_beta(Fd).beta < 1e-8);
        for (const auto& p : critical_curve_P3(Gr, xi0)) {
            auto Fp = Gr.with_fundamental(p.zeta);
            CHECK(std::abs(Fp.eval(xi0, 1)) < 1e-13);
            const double m = 3 * Fp.eval(xi0, 2) * Fp.eval(xi0, 4) - 5 * std::pow(Fp.eval(xi0, 3), 2);
            CHECK(std::abs(m) < 1e-11);
        }
    }
}

TEST_CASE("classify") {
    // cosine-type low modes with a floor tail
    FourierPotential f(2, 1.0, {{WaveVector{1, 0}, 0.3}, {WaveVector{0, 1}, Complex(0, 0.2)}, {WaveVector{1, 1}, 0.05}},
                       Tail::floor(0.2));
    std::vector<double> grid{0.2, 0.1, 0.05};
    auto r = classify(f, grid);
    CHECK(r.verdict);
    CHECK(r.delta <= 0.2);
    CHECK(r.c_K == 4.0);

    FourierPotential trig(2, 1.0, {{WaveVector{1, 0}, 0.3}});
    for (double d : grid) CHECK_FALSE(check_class(trig, d).p1.pass);
    CHECK_FALSE(classify(trig, grid).verdict);

    auto j = report_to_json(r);
    CHECK(j["c_K"] == 4.0);
    CHECK(j["tol_beta"] == 1e-10);
}

TEST_CASE("repair_to_Ps_prime") {
    const double theta = 0.1;
    FourierPotential member(2, 1.0, {{WaveVector{1, 0}, 0.3}, {WaveVector{0, 1}, Complex(0, 0.2)}}, Tail::floor(0.2));
    auto same = repair_to_Ps_prime(member, theta);
    CHECK(same.changes.empty());
    CHECK(same.potential.modes() == member.modes());
    CHECK(same.potential.tail() == member.tail());

    // scale so that the (1,1) profile is degenerate: F = A(cos + cos2/4)
    const double A = 0.8 * std::exp(-2.0);
    FourierPotential deg(2, 1.0, {{WaveVector{1, 1}, 0.5 * A}, {WaveVector{2, 2}, 0.125 * A}});
    CHECK(morse_beta(profile_of(deg, WaveVector{1, 1})).beta < 1e-12);
    auto rep = repair_to_Ps_prime(deg, theta);
    std::vector<double> grid{theta / 4};
    CHECK(classify(rep.potential, grid).verdict);
    for (const auto& [k, c] : rep.potential.modes())
        CHECK(std::abs(c - deg.coefficient(k)) * std::exp(k.l1()) <= theta);
}

TEST_CASE("critical_points: cos + 0.3 sin 2xi has two critical points") {
    // F' = -sin - 1.2 sin^2 + 0.6 vanishes only where sin xi = (-1 + sqrt 3.88)/2.4
    auto F = OneDProfile::from_terms({{1, 1.0, 0.0}, {2, 0.0, 0.3}});
    auto cps = critical_points(F);
    CHECK(static_cast<int>(cps.size()) == brute_sign_changes(F));
    REQUIRE(cps.size() == 2);
    const double s0 = (-1.0 + std::sqrt(3.88)) / 2.4;
    for (const auto& c : cps) CHECK(std::sin(c.xi) == doctest::Approx(s0).epsilon(1e-10));
}

TEST_CASE("repair contract on random potentials") {
    std::mt19937_64 rng(2024);
    const double theta = 0.1;
    for (int t = 0; t < 100; ++t) {
        auto f = kam::testing::random_finite_potential(2, 1.0, 5, rng);
        auto rep = repair_to_Ps_prime(f, theta);
        std::vector<double> grid{theta / 4};
        auto r = classify(rep.potential, grid);
        CHECK_MESSAGE(r.verdict, "draw " << t);
        CHECK(r.delta == theta / 4);
        for (const auto& ch : rep.changes)
            CHECK(std::abs(ch.after - ch.before) * std::exp(ch.k.l1()) <= theta * (1 + 1e-12));
        CHECK(rep.potential.tail().delta0 >= theta / 4);
    }
}

TEST_CASE("members of P_s' stay members under small perturbations") {
    std::mt19937_64 rng(77);
    const double theta = 0.1, delta = theta / 4, c_K = 4.0, s = 1.0;
    const double K = cutoff_K(delta, s, c_K);
    // rho keeps the low-mode set: K_s(delta - rho) < floor(K_s(delta)) + 1
    const double rho_max = delta - c_K * std::exp(-(std::floor(K) + 1) * s / 2);
    REQUIRE(rho_max > 0);
    const double rho = std::min(0.5 * rho_max, delta / 10);
    REQUIRE(std::floor(cutoff_K(delta - rho, s, c_K)) == std::floor(K));
    auto base = repair_to_Ps_prime(kam::testing::random_finite_potential(2, s, 4, rng), theta).potential;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        FourierPotential::ModeMap gm;
        for (auto& k : sharp_vectors(2, 12)) gm[k] = std::polar(0.99 * rho * std::sqrt(u(rng)), 2 * pi * u(rng)) * std::exp(-k.l1() * s);
        FourierPotential g(2, s, std::move(gm));
        REQUIRE(norm_s(g) < rho);
        std::vector<double> grid{delta - rho};
        CHECK(classify(sum(base, g), grid).verdict);
    }
}
