#include "kam/fourier_potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace kam {

namespace {

// sum_{m > from} count(m)/2 * m^p * exp(-m s), the sup bound of an e^{-|k|s}-envelope tail.
double envelope_tail_sum(int n, int from, double s, int power) {
    double total = 0.0;
    for (int m = from + 1; m < from + 10000; ++m) {
        const double term = 0.5 * static_cast<double>(count_vectors_l1(n, m)) * std::pow(m, power) * std::exp(-m * s);
        total += term;
        if (m > from + 5 && term < 1e-18 * std::max(total, 1e-300)) break;
    }
    return total;
}

} // namespace

FourierPotential::FourierPotential(int n, double s, ModeMap modes, Tail tail, std::optional<int> k_max)
    : n_(n), s_(s), modes_(std::move(modes)), tail_(tail), k_max_(k_max) {
    if (n < 1) throw std::invalid_argument("FourierPotential: dimension must be >= 1");
    if (!(s > 0)) throw std::invalid_argument("FourierPotential: analyticity width s must be > 0");
    if (tail.kind == Tail::Kind::floor && !(tail.delta0 >= 0))
        throw std::invalid_argument("FourierPotential: floor tail level must be >= 0");
    if (k_max && *k_max < 1) throw std::invalid_argument("FourierPotential: k_max must be >= 1");
    for (const auto& [k, c] : modes_) {
        if (k.dim() != n) throw std::invalid_argument("FourierPotential: mode " + k.str() + " has wrong dimension");
        if (!k.is_sharp()) throw std::invalid_argument("FourierPotential: mode " + k.str() + " is not sharp");
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
            throw std::invalid_argument("FourierPotential: non-finite coefficient at " + k.str());
    }
}

Complex FourierPotential::tail_coefficient(const WaveVector& k) const {
    if (tail_.kind == Tail::Kind::zero || !k.is_star()) return 0.0;
    return tail_.delta0 * std::exp(-k.l1() * s_);
}

Complex FourierPotential::coefficient(const WaveVector& k) const {
    if (k.is_zero()) return 0.0;
    if (!k.is_sharp()) return std::conj(coefficient(-k));
    if (auto it = modes_.find(k); it != modes_.end()) return it->second;
    return tail_coefficient(k);
}

FourierPotential FourierPotential::with_mode(const WaveVector& k, Complex value) const {
    ModeMap m = modes_;
    m[k] = value;
    return FourierPotential(n_, s_, std::move(m), tail_, k_max_);
}

FourierPotential FourierPotential::with_tail(Tail tail) const {
    return FourierPotential(n_, s_, modes_, tail, k_max_);
}

FourierPotential FourierPotential::without_k_max() const {
    return FourierPotential(n_, s_, modes_, tail_, std::nullopt);
}

double norm_s(const FourierPotential& f) {
    double sup = 0.0;
    for (const auto& [k, c] : f.modes()) sup = std::max(sup, std::abs(c) * std::exp(k.l1() * f.width()));
    if (f.tail().kind == Tail::Kind::floor) sup = std::max(sup, f.tail().delta0);
    return sup;
}

FourierPotential scaled(const FourierPotential& f, double c) {
    Tail tail = f.tail();
    if (tail.kind == Tail::Kind::floor) {
        if (c < 0) throw std::invalid_argument("scaled: negative factor on a floor tail is not representable");
        tail.delta0 *= c;
    }
    FourierPotential::ModeMap m;
    for (const auto& [k, v] : f.modes()) m[k] = c * v;
    return FourierPotential(f.dim(), f.width(), std::move(m), tail, f.k_max());
}

FourierPotential sum(const FourierPotential& f, const FourierPotential& g) {
    if (f.dim() != g.dim() || f.width() != g.width())
        throw std::invalid_argument("sum: potentials differ in dimension or width");
    Tail tail;
    if (f.tail().kind == Tail::Kind::floor || g.tail().kind == Tail::Kind::floor)
        tail = Tail::floor((f.tail().kind == Tail::Kind::floor ? f.tail().delta0 : 0.0) +
                           (g.tail().kind == Tail::Kind::floor ? g.tail().delta0 : 0.0));
    FourierPotential::ModeMap m;
    for (const auto& [k, v] : f.modes()) m[k] = 0.0;
    for (const auto& [k, v] : g.modes()) m[k] = 0.0;
    for (auto& [k, v] : m) v = f.coefficient(k) + g.coefficient(k);
    std::optional<int> k_max;
    if (f.k_max() && g.k_max()) k_max = std::min(*f.k_max(), *g.k_max());
    else if (f.k_max()) k_max = f.k_max();
    else k_max = g.k_max();
    return FourierPotential(f.dim(), f.width(), std::move(m), tail, k_max);
}

// ---------------------------------------------------------------------------

OneDProfile::OneDProfile(std::vector<Complex> coeffs, WaveVector base, double width, double envelope)
    : base_(std::move(base)), coeffs_(std::move(coeffs)), width_(width), envelope_(envelope) {
    while (!coeffs_.empty() && coeffs_.back() == Complex(0.0)) coeffs_.pop_back();
    if (envelope_ > 0 && !(width_ > 0))
        throw std::invalid_argument("OneDProfile: a truncation envelope needs a positive width");
}

OneDProfile OneDProfile::from_terms(std::span<const Term> terms) {
    std::vector<Complex> c;
    for (const auto& t : terms) {
        if (t.j < 1) throw std::invalid_argument("OneDProfile::from_terms: harmonic index must be >= 1");
        if (static_cast<int>(c.size()) < t.j) c.resize(t.j);
        // a cos + b sin = 2 Re(c e^{ij xi}) with c = (a - i b) / 2
        c[t.j - 1] += Complex(0.5 * t.cos_amp, -0.5 * t.sin_amp);
    }
    return OneDProfile(std::move(c));
}

OneDProfile OneDProfile::from_terms(std::initializer_list<Term> terms) {
    return from_terms(std::span<const Term>(terms.begin(), terms.size()));
}

Complex OneDProfile::coefficient(int j) const {
    if (j == 0) return 0.0;
    if (j < 0) return std::conj(coefficient(-j));
    return j <= degree() ? coeffs_[j - 1] : Complex(0.0);
}

bool OneDProfile::is_zero() const { return coeffs_.empty(); }

namespace {

// (i j)^d
Complex ij_power(int j, int d) {
    static const Complex units[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    double m = 1.0;
    for (int i = 0; i < d; ++i) m *= j;
    return units[d % 4] * m;
}

} // namespace

double OneDProfile::eval(double xi, int d) const {
    double s = 0.0;
    // e^{i j xi} by recurrence, re-anchored every 16 harmonics to bound the drift
    const Complex e1(std::cos(xi), std::sin(xi));
    Complex e = e1;
    for (int j = 1; j <= degree(); ++j) {
        if (j > 1) e = (j % 16 == 0) ? Complex(std::cos(j * xi), std::sin(j * xi)) : e * e1;
        s += 2.0 * (coeffs_[j - 1] * ij_power(j, d) * e).real();
    }
    return s;
}

std::pair<double, double> OneDProfile::slope_curvature(double xi) const {
    double d1 = 0.0, d2 = 0.0;
    const Complex e1(std::cos(xi), std::sin(xi));
    Complex e = e1;
    for (int j = 1; j <= degree(); ++j) {
        if (j > 1) e = (j % 16 == 0) ? Complex(std::cos(j * xi), std::sin(j * xi)) : e * e1;
        const Complex t = coeffs_[j - 1] * e;
        d1 -= 2.0 * j * t.imag();
        d2 -= 2.0 * j * j * t.real();
    }
    return {d1, d2};
}

double OneDProfile::difference(double a, double v, int d) const {
    double s = 0.0;
    for (int j = 1; j <= degree(); ++j) {
        const double half = 0.5 * j * v;
        const double sh = std::sin(half);
        const Complex em1(-2.0 * sh * sh, std::sin(j * v)); // e^{i j v} - 1
        const Complex e(std::cos(j * a), std::sin(j * a));
        s += 2.0 * (coeffs_[j - 1] * ij_power(j, d) * e * em1).real();
    }
    return s;
}

double OneDProfile::derivative_bound(int d) const {
    double s = 0.0;
    for (int j = 1; j <= degree(); ++j) s += 2.0 * std::pow(j, d) * std::abs(coeffs_[j - 1]);
    return s;
}

double OneDProfile::truncation_bound(int d) const {
    if (envelope_ == 0.0) return 0.0;
    double total = 0.0;
    for (int j = degree() + 1; j < degree() + 100000; ++j) {
        const double term = 2.0 * envelope_ * std::pow(j, d) * std::exp(-j * width_);
        total += term;
        if (j > degree() + d + 2 && term < 1e-18 * total) break;
    }
    return total;
}

OneDProfile OneDProfile::without_fundamental() const {
    std::vector<Complex> c = coeffs_;
    if (!c.empty()) c[0] = 0.0;
    return OneDProfile(std::move(c), base_, width_, envelope_);
}

OneDProfile OneDProfile::with_fundamental(Complex f1) const {
    std::vector<Complex> c = coeffs_;
    if (c.empty()) c.resize(1);
    c[0] = f1;
    return OneDProfile(std::move(c), base_, width_, envelope_);
}

OneDProfile OneDProfile::scaled(double c) const {
    std::vector<Complex> out = coeffs_;
    for (auto& v : out) v *= c;
    return OneDProfile(std::move(out), base_, width_, envelope_ * std::abs(c));
}

ProfileValue eval_profile(const OneDProfile& F, double xi, int d) {
    if (d < 0 || d > 4) throw std::invalid_argument("eval_profile: derivative order must be in 0..4");
    return {F.eval(xi, d), F.truncation_bound(d)};
}

OneDProfile profile_of(const FourierPotential& f, const WaveVector& k_star) {
    if (!k_star.is_star()) throw std::invalid_argument("profile_of: " + k_star.str() + " is not a star vector");
    int J = 1;
    for (const auto& [k, c] : f.modes()) {
        auto cls = canonical_class(k);
        if (cls.base == k_star) J = std::max(J, cls.multiple);
    }
    std::vector<Complex> coeffs(J);
    for (int j = 1; j <= J; ++j) coeffs[j - 1] = f.coefficient(k_star.scaled(j));
    const double envelope = f.k_max() ? 1.0 : 0.0;
    return OneDProfile(std::move(coeffs), k_star, k_star.l1() * f.width(), envelope);
}

std::map<WaveVector, OneDProfile> decompose(const FourierPotential& f) {
    std::set<WaveVector> bases;
    for (const auto& [k, c] : f.modes()) bases.insert(canonical_class(k).base);
    std::map<WaveVector, OneDProfile> out;
    for (const auto& b : bases) out.emplace(b, profile_of(f, b));
    return out;
}

// ---------------------------------------------------------------------------

EvaluationModel evaluation_model(const FourierPotential& f, int k_eval) {
    EvaluationModel m;
    m.n = f.dim();
    for (const auto& [k, c] : f.modes()) {
        if (c == Complex(0.0)) continue;
        m.k.push_back(k);
        m.c.push_back(c);
    }
    if (f.tail().kind == Tail::Kind::floor && f.tail().delta0 > 0) {
        if (k_eval < 1) throw std::invalid_argument("evaluation of a floor-tail potential needs a cutoff k_eval >= 1");
        for (auto& k : star_vectors(f.dim(), k_eval)) {
            if (f.is_stored(k)) continue;
            m.c.push_back(f.tail_coefficient(k));
            m.k.push_back(std::move(k));
        }
        m.truncation_bound = 2.0 * f.tail().delta0 * envelope_tail_sum(f.dim(), k_eval, f.width(), 0);
        m.gradient_truncation_bound = 2.0 * f.tail().delta0 * envelope_tail_sum(f.dim(), k_eval, f.width(), 1);
    }
    if (f.k_max()) {
        m.truncation_bound += 2.0 * envelope_tail_sum(f.dim(), *f.k_max(), f.width(), 0);
        m.gradient_truncation_bound += 2.0 * envelope_tail_sum(f.dim(), *f.k_max(), f.width(), 1);
    }
    for (const auto& k : m.k)
        for (int c : k.components()) m.max_component = std::max(m.max_component, std::abs(c));
    return m;
}

double eval(const EvaluationModel& model, std::span<const double> x) {
    if (static_cast<int>(x.size()) != model.n) throw std::invalid_argument("eval: point has wrong dimension");
    double s = 0.0;
    for (std::size_t i = 0; i < model.k.size(); ++i) {
        const double phase = model.k[i].dot(x);
        s += 2.0 * (model.c[i] * Complex(std::cos(phase), std::sin(phase))).real();
    }
    return s;
}

void gradient(const EvaluationModel& model, std::span<const double> x, std::span<double> out) {
    if (static_cast<int>(x.size()) != model.n || out.size() != x.size())
        throw std::invalid_argument("gradient: wrong dimension");
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < model.k.size(); ++i) {
        const double phase = model.k[i].dot(x);
        const double im = (model.c[i] * Complex(std::cos(phase), std::sin(phase))).imag();
        for (int j = 0; j < model.n; ++j) out[j] -= 2.0 * model.k[i][j] * im;
    }
}

PotentialValue eval(const FourierPotential& f, std::span<const double> x, int k_eval) {
    const auto model = evaluation_model(f, k_eval);
    return {eval(model, x), model.truncation_bound};
}

} // namespace kam
