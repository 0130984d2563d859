#include "doctest.h"

#include "kam/survey.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

using namespace kam;

namespace {

constexpr double pi = std::numbers::pi;

// sum of a cos(k.x + phase) terms
FourierPotential cosines(int n, std::initializer_list<std::pair<WaveVector, Complex>> terms, double s = 1.0) {
    FourierPotential::ModeMap m;
    for (const auto& [k, a] : terms) m[k] = 0.5 * a;
    return FourierPotential(n, s, m);
}

FourierPotential pendulum() { return cosines(1, {{WaveVector{1}, 1.0}}); }

// two resonances that overlap at moderate eps
FourierPotential coupled() {
    return cosines(2, {{WaveVector{1, 0}, 1.0}, {WaveVector{0, 1}, 0.8}, {WaveVector{1, -1}, 0.6},
                       {WaveVector{1, -2}, Complex(0.0, 0.3)}});
}

double max_energy_error(const ForceField& f, double eps, double dt, double T, Scheme scheme) {
    IntegratorSettings s;
    s.dt = dt;
    s.steps = static_cast<std::size_t>(std::llround(T / dt));
    s.scheme = scheme;
    const std::vector<double> y0{0.3}, x0{0.4};
    return integrate(f, eps, y0, x0, s).energy_drift * eps;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

TEST_CASE("force field agrees with direct evaluation") {
    const auto f = coupled();
    const ForceField ff(f, 0);
    const auto model = evaluation_model(f);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 2 * pi);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> x{u(rng), u(rng)}, g(2), g_ref(2), H(4);
        const double v = ff.value_gradient(x, g);
        gradient(model, x, g_ref);
        CHECK(v == doctest::Approx(eval(model, x)).epsilon(1e-13));
        CHECK(g[0] == doctest::Approx(g_ref[0]).epsilon(1e-12));
        CHECK(g[1] == doctest::Approx(g_ref[1]).epsilon(1e-12));
        ff.hessian(x, H);
        CHECK(H[1] == doctest::Approx(H[2]));
        const double h = 1e-6;
        for (int a = 0; a < 2; ++a) {
            auto xp = x, xm = x;
            xp[a] += h;
            xm[a] -= h;
            std::vector<double> gp(2), gm(2);
            ff.value_gradient(xp, gp);
            ff.value_gradient(xm, gm);
            for (int b = 0; b < 2; ++b) CHECK(std::abs(H[b * 2 + a] - (gp[b] - gm[b]) / (2 * h)) < 1e-7);
        }
    }
}

TEST_CASE("force field truncates floor tails and high stored modes") {
    auto f = coupled().with_tail(Tail::floor(0.01)).with_mode(WaveVector{5, 4}, 1e-3);
    const ForceField ff(f, 6);
    for (const auto& k : ff.model().k) CHECK(k.l1() <= 6);
    CHECK(ff.model().truncation_bound >= 2e-3);
    CHECK_THROWS_AS(ForceField(f, 0), std::invalid_argument);
}

TEST_CASE("integrator: free flight is exact") {
    const ForceField ff(coupled(), 0);
    IntegratorSettings s;
    s.dt = 0.1;
    s.steps = 1000;
    const std::vector<double> y0{0.7, -1.3}, x0{0.2, 5.0};
    const auto t = integrate(ff, 0.0, y0, x0, s);
    REQUIRE(t.size() == 1001);
    for (std::size_t j = 0; j < t.size(); j += 97)
        for (int d = 0; d < 2; ++d) {
            CHECK(t.y_at(j)[d] == y0[d]);
            CHECK(std::abs(t.x_at(j)[d] - (x0[d] + j * 0.1 * y0[d])) < 1e-12 * (1 + j));
        }
    CHECK(t.energy_drift < 1e-14);
}

TEST_CASE("integrator: symplectic order and no secular energy growth") {
    const ForceField ff(pendulum(), 0);
    std::vector<double> ldt, lerr, lerr4;
    for (double dt : {1e-2, 5e-3, 2.5e-3}) {
        ldt.push_back(std::log(dt));
        lerr.push_back(std::log(max_energy_error(ff, 1.0, dt, 50.0, Scheme::leapfrog)));
        lerr4.push_back(std::log(max_energy_error(ff, 1.0, 8 * dt, 50.0, Scheme::yoshida4)));
    }
    CHECK(std::abs(slope(ldt, lerr) - 2.0) < 0.1);
    CHECK(std::abs(slope(ldt, lerr4) - 4.0) < 0.2);

    // 1e6 steps: the error stays bounded by its early amplitude
    IntegratorSettings s;
    s.dt = 0.05;
    s.steps = 1'000'000;
    s.stride = 1000;
    const std::vector<double> y0{0.3}, x0{0.4};
    const auto early = max_energy_error(ff, 1.0, 0.05, 1000 * 0.05, Scheme::leapfrog);
    const auto t = integrate(ff, 1.0, y0, x0, s);
    CHECK(t.energy_drift < 1.5 * early);
}

TEST_CASE("integrator: time reversal") {
    const ForceField ff(coupled(), 0);
    for (Scheme scheme : {Scheme::leapfrog, Scheme::yoshida4}) {
        std::vector<double> y{0.9, 1.1}, x{0.3, 2.0};
        const auto y0 = y, x0 = x;
        advance(ff, 0.05, y, x, 0.01, 10000, scheme);
        advance(ff, 0.05, y, x, -0.01, 10000, scheme);
        for (int d = 0; d < 2; ++d) {
            CHECK(std::abs(y[d] - y0[d]) < 1e-9);
            CHECK(std::abs(x[d] - x0[d]) < 1e-9);
        }
    }
}

TEST_CASE("integrator: stability guard and energy flag") {
    const ForceField ff(coupled(), 0);
    IntegratorSettings s;
    s.dt = 1.0;
    s.steps = 10;
    const std::vector<double> y0{1.0, 1.0}, x0{0.0, 0.0};
    CHECK_THROWS_AS(integrate(ff, 1.0, y0, x0, s), std::invalid_argument);
    s.dt = 0.1;
    s.steps = 2000;
    s.energy_tol = 1e-12;
    CHECK(integrate(ff, 0.01, y0, x0, s).energy_flag);
    s.energy_tol = 5e-2;
    CHECK_FALSE(integrate(ff, 0.01, y0, x0, s).energy_flag);
}

TEST_CASE("classifier: unperturbed orbits are tori") {
    const ForceField ff(coupled(), 0);
    IntegratorSettings s;
    s.steps = 20000;
    const std::vector<double> y0{1.0, (1 + std::sqrt(5.0)) / 2}, x0{0.1, 0.2};
    const auto t = integrate(ff, 0.0, y0, x0, s);
    const auto w = birkhoff_frequency(t, 0, t.size() - 1);
    CHECK(std::abs(w[0] - y0[0]) < 1e-12);
    CHECK(std::abs(w[1] - y0[1]) < 1e-12);
    const auto c = classify_orbit(t);
    CHECK(c.verdict == Verdict::torus);
    CHECK(c.drift < 1e-11);
    CHECK_FALSE(c.locked);
}

TEST_CASE("classifier: pendulum libration is a locked torus") {
    const ForceField ff(pendulum(), 0);
    IntegratorSettings s;
    s.steps = 50000;
    // inside the separatrix: eta^2/2 + eps cos x < eps
    const std::vector<double> y0{0.05}, x0{pi};
    const auto t = integrate(ff, 0.01, y0, x0, s);
    const auto c = classify_orbit(t);
    CHECK(c.verdict == Verdict::torus);
    CHECK(c.locked);
    CHECK(std::abs(c.omega_second[0]) < 1e-9);
    // rotation above the separatrix: not locked
    const std::vector<double> y1{0.5};
    const auto r = classify_orbit(integrate(ff, 0.01, y1, x0, s));
    CHECK(r.verdict == Verdict::torus);
    CHECK_FALSE(r.locked);
}

TEST_CASE("classifier: chaotic seed from an FLI pre-scan") {
    const ForceField ff(coupled(), 0);
    const double eps = 0.05;
    double best = -1.0;
    std::vector<double> seed_y;
    const std::vector<double> x0{0.5, 1.0};
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            const std::vector<double> y{-0.35 + 0.1 * i, -0.35 + 0.1 * j};
            const double fli = fast_lyapunov_indicator(ff, eps, y, x0, 0.05, 4000).fli;
            if (fli > best) {
                best = fli;
                seed_y = y;
            }
        }
    // regular orbits grow like log t; this one grows linearly
    CHECK(best > 12.0);
    IntegratorSettings s;
    s.dt = 0.05;
    s.steps = 100000;
    const auto c = classify_orbit(integrate(ff, eps, seed_y, x0, s));
    CHECK(c.verdict == Verdict::non_torus);

    const std::vector<double> fast{1.3, 2.1};
    CHECK(fast_lyapunov_indicator(ff, eps, fast, x0, 0.05, 4000).fli < 8.0);
}

TEST_CASE("classifier: separable potentials calibrate tol_freq") {
    // integrable: every orbit off the separatrices is a torus
    const auto f = cosines(2, {{WaveVector{1, 0}, 1.0}, {WaveVector{0, 1}, 0.7}});
    const ForceField ff(f, 0);
    for (double eps : {1e-2, 1e-3}) {
        SurveySettings ss;
        ss.min_orbits = 1;
        const auto r = nontorus_fraction(f, eps, ActionRegion::cube(2, -0.3, 0.3), 60, 17, ss, 0);
        CHECK(r.count[1] == 0);
        CHECK(r.fraction[0] >= 0.95);
    }
}

TEST_CASE("survey: zero perturbation, reproducibility, quotability") {
    const auto f = coupled();
    SurveySettings ss;
    ss.integrator.steps = 4000;
    const auto B = ActionRegion::cube(2, 0.6, 1.4);
    const auto r0 = nontorus_fraction(f, 0.0, B, 500, 3, ss, 0);
    CHECK(r0.count[0] == 500);
    CHECK(r0.not_torus_fraction() == 0.0);
    CHECK(r0.quotable);

    const auto a = nontorus_fraction(f, 0.01, B, 40, 9, ss, 1);
    const auto b = nontorus_fraction(f, 0.01, B, 40, 9, ss, 4);
    CHECK_FALSE(a.quotable);
    for (std::size_t i = 0; i < 40; ++i) {
        CHECK(a.orbits[i].y0 == b.orbits[i].y0);
        CHECK(a.orbits[i].verdict == b.orbits[i].verdict);
        CHECK(a.orbits[i].drift == b.orbits[i].drift);
    }
    double total = 0.0;
    for (double v : a.fraction) total += v;
    CHECK(total == doctest::Approx(1.0));
    CHECK_THROWS_AS(nontorus_fraction(f, 100.0, B, 10, 1, ss, 1), std::invalid_argument);
}

TEST_CASE("survey: eps trend, zone concentration and verdict stability") {
    // unit-ball sized coefficients, so resonances stay inside their sqrt(eps) zones
    const auto f = cosines(2, {{WaveVector{1, 0}, 0.8}, {WaveVector{0, 1}, 0.6}, {WaveVector{1, -1}, 0.5},
                               {WaveVector{1, -2}, Complex(0.0, 0.3)}});
    SurveySettings ss;
    ss.integrator.steps = 20000;
    ss.max_doublings = 2;
    const auto B = ActionRegion::cube(2, 0.6, 1.4);
    const std::size_t N = 500;
    const auto hi = nontorus_fraction(f, 1e-2, B, N, 21, ss, 0);
    const auto lo = nontorus_fraction(f, 1e-3, B, N, 21, ss, 0);
    MESSAGE("not-torus " << hi.not_torus_fraction() << " at 1e-2, " << lo.not_torus_fraction() << " at 1e-3");
    CHECK(lo.not_torus_interval.lo <= hi.not_torus_interval.hi);
    CHECK(lo.not_torus_fraction() <= hi.not_torus_fraction());
    CHECK(hi.count[1] > 0);

    // pooled over both eps: B0 is empty at 1e-2, where the zones cover B
    std::size_t b0_total = 0, b0_bad = 0, res_total = 0, res_bad = 0;
    for (const auto* r : {&hi, &lo})
        for (int z = 0; z < 3; ++z) {
            const auto& row = r->by_zone[z];
            (z == 0 ? b0_total : res_total) += row[0] + row[1] + row[2];
            (z == 0 ? b0_bad : res_bad) += row[1] + row[2];
        }
    REQUIRE(b0_total > 0);
    REQUIRE(res_total > 0);
    CHECK(double(b0_bad) / double(b0_total) < double(res_bad) / double(res_total));

    // doubling every window flips few torus / non_torus verdicts
    auto longer = ss;
    longer.integrator.steps *= 2;
    const auto hi2 = nontorus_fraction(f, 1e-2, B, N, 21, longer, 0);
    std::size_t flips = 0;
    for (std::size_t i = 0; i < N; ++i) {
        const auto a = hi.orbits[i].verdict, b = hi2.orbits[i].verdict;
        if (a != Verdict::undecided && b != Verdict::undecided && a != b) ++flips;
    }
    CHECK(flips < N / 50);
}

TEST_CASE("scaling fit: synthetic curves") {
    std::vector<FitPoint> pts;
    for (double e : {1e-2, 3e-3, 1e-3, 3e-4, 1e-4}) pts.push_back({e, e * std::pow(std::abs(std::log(e)), 3), 0.05});
    const auto fit = scaling_fit(pts);
    REQUIRE(fit.full);
    CHECK(fit.full->alpha == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.full->beta == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(fit.full->alpha_ci.lo <= 1.0);
    CHECK(fit.full->alpha_ci.hi >= 1.0);
    CHECK(fit.full->beta_ci.lo <= 3.0);
    CHECK(fit.full->beta_ci.hi >= 3.0);
    CHECK(fit.full->chi2 < 1e-12);

    std::vector<FitPoint> root;
    for (double e : {1e-2, 3e-3, 1e-3}) root.push_back({e, std::sqrt(e), 0.05});
    const auto r = scaling_fit(root);
    CHECK_FALSE(r.full);
    CHECK_FALSE(r.note.empty());
    CHECK(r.reduced.alpha == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(r.preferred == "alpha = 1/2");
    CHECK(r.chi2_alpha_half < 1e-12);

    std::vector<FitPoint> same{{1e-2, 0.1, 0.1}, {1e-2, 0.2, 0.1}};
    CHECK_THROWS_AS(scaling_fit(same), std::invalid_argument);
    CHECK_THROWS_AS(scaling_fit(std::span<const FitPoint>(root.data(), 1)), std::invalid_argument);
}

TEST_CASE("scaling fit: binomial points and Monte Carlo coverage") {
    const auto z = fit_point(1e-3, 0, 1000);
    CHECK(z.m == doctest::Approx(0.5 / 1001));
    const auto p = fit_point(1e-3, 100, 1000);
    CHECK(p.sd_log == doctest::Approx(std::sqrt(0.9 / 100)));

    // binomial data drawn from m = eps / 2: the alpha CI covers 1 in most replicates
    std::mt19937_64 rng(5);
    int covered = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        std::vector<FitPoint> pts;
        for (double e : {1e-1, 3e-2, 1e-2, 3e-3}) {
            std::binomial_distribution<std::size_t> draw(20000, e / 2);
            pts.push_back(fit_point(e, draw(rng), 20000));
        }
        const auto fit = scaling_fit(pts);
        if (fit.reduced.alpha_ci.lo <= 1.0 && fit.reduced.alpha_ci.hi >= 1.0) ++covered;
    }
    CHECK(covered >= 0.9 * reps);
}
