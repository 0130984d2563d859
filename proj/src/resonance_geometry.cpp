#include "kam/resonance_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace kam {

ActionRegion::ActionRegion(std::vector<std::pair<double, double>> bounds) : bounds_(std::move(bounds)) {
    if (bounds_.empty()) throw std::invalid_argument("ActionRegion: empty");
    for (const auto& [lo, hi] : bounds_)
        if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
            throw std::invalid_argument("ActionRegion: each interval must be finite with lo < hi");
}

ActionRegion ActionRegion::cube(int n, double lo, double hi) {
    return ActionRegion(std::vector<std::pair<double, double>>(n, {lo, hi}));
}

double ActionRegion::volume() const {
    double v = 1.0;
    for (const auto& [lo, hi] : bounds_) v *= hi - lo;
    return v;
}

double ActionRegion::radius() const {
    double r = 0.0;
    for (const auto& [lo, hi] : bounds_) r = std::max({r, std::abs(lo), std::abs(hi)});
    return r;
}

void ActionRegion::map_unit(std::span<const double> u, std::span<double> y) const {
    for (std::size_t i = 0; i < bounds_.size(); ++i) y[i] = bounds_[i].first + u[i] * (bounds_[i].second - bounds_[i].first);
}

double default_width_exponent(int n) { return 2.0 * n + 6.0; }

std::vector<WaveVector> resonant_modes(double eps, int n, double cutoff_exponent, std::size_t max_modes) {
    if (!(eps > 0 && eps < 1)) throw std::invalid_argument("resonant_modes: eps must lie in (0,1)");
    if (n < 1) throw std::invalid_argument("resonant_modes: n >= 1 required");
    const double cut = std::pow(std::abs(std::log(eps)), cutoff_exponent);
    // |ln eps|^2 lands a few ulps below an integer for eps = e^{-sqrt m}
    const double guarded = std::floor(cut * (1 + 1e-12) + 1e-12);
    if (guarded > 1e6) throw std::length_error("resonant_modes: cutoff " + std::to_string(cut) + " too large");
    const int m = static_cast<int>(guarded);
    const auto bound = count_sharp_upto(n, m);
    if (bound > max_modes)
        throw std::length_error("resonant_modes: up to " + std::to_string(bound) + " modes below |k| <= " +
                                std::to_string(m) + " exceed the budget " + std::to_string(max_modes));
    return star_vectors(n, m);
}

double zone_width(double eps, int n, std::optional<double> width_exponent) {
    if (!(eps > 0 && eps < 1)) throw std::invalid_argument("zone_width: eps must lie in (0,1)");
    return std::sqrt(eps) * std::pow(std::abs(std::log(eps)), width_exponent.value_or(default_width_exponent(n)));
}

const char* to_string(Zone z) {
    switch (z) {
    case Zone::B0: return "B0";
    case Zone::B1: return "B1";
    case Zone::B2: return "B2";
    }
    return "?";
}

PointZone ZoneDecomposition::classify(std::span<const double> y) const {
    PointZone out;
    int inside = 0;
    double best = INFINITY;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const double d = std::abs(modes[i].dot(y));
        if (d <= width) {
            if (inside == 0) {
                out.mode = static_cast<int>(i);
                out.margin = d;
            }
            ++inside;
            if (inside == 2) {
                out.zone = Zone::B2;
                return out;
            }
        } else if (inside == 0 && d < best) {
            best = d;
            out.mode = static_cast<int>(i);
            out.margin = d;
        }
    }
    out.zone = inside == 1 ? Zone::B1 : Zone::B0;
    return out;
}

ZoneDecomposition make_zones(double eps, int n, const ZoneConfig& cfg) {
    ZoneDecomposition z;
    z.epsilon = eps;
    z.n = n;
    z.modes = resonant_modes(eps, n, cfg.mode_cutoff_exponent, cfg.max_modes);
    z.width = zone_width(eps, n, cfg.width_exponent);
    return z;
}

void sample_point(const ActionRegion& B, std::uint64_t seed, std::uint64_t stream, std::span<double> y) {
    SplitMix64 rng(derive_seed(seed, stream));
    std::vector<double> u(B.dim());
    for (auto& v : u) v = rng.uniform();
    B.map_unit(u, y);
}

ZoneMeasures zone_measures(const ZoneDecomposition& zones, const ActionRegion& B, std::size_t N, std::uint64_t seed,
                           unsigned threads) {
    if (N < 100) throw std::invalid_argument("zone_measures: N >= 100 required");
    if (B.dim() != zones.n) throw std::invalid_argument("zone_measures: dimension mismatch");
    std::vector<unsigned char> label(N);
    parallel_for(N, threads, [&](std::size_t i) {
        std::vector<double> y(B.dim());
        sample_point(B, seed, i, y);
        label[i] = static_cast<unsigned char>(zones.classify(y).zone);
    });
    ZoneMeasures m;
    m.samples = N;
    for (auto l : label) ++m.count[l];
    for (int z = 0; z < 3; ++z) {
        m.fraction[z] = static_cast<double>(m.count[z]) / N;
        m.interval[z] = wilson_interval(m.count[z], N);
    }
    return m;
}

} // namespace kam
