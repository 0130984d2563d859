#pragma once

#include "kam/stats.hpp"
#include "kam/wave_vector.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <span>
#include <utility>
#include <vector>

namespace kam {

/// Axis-aligned box B in action space.
class ActionRegion {
public:
    explicit ActionRegion(std::vector<std::pair<double, double>> bounds);
    static ActionRegion cube(int n, double lo, double hi);

    int dim() const { return static_cast<int>(bounds_.size()); }
    const std::vector<std::pair<double, double>>& bounds() const { return bounds_; }
    double volume() const;
    /// max over the box of |y|_inf.
    double radius() const;
    /// Point of B at unit-cube coordinates u.
    void map_unit(std::span<const double> u, std::span<double> y) const;

private:
    std::vector<std::pair<double, double>> bounds_;
};

struct ZoneConfig {
    /// Zone half-width exponent; unset selects c_n = 2n + 6.
    std::optional<double> width_exponent;
    /// Resonant modes have |k| <= |ln eps|^mode_cutoff_exponent.
    double mode_cutoff_exponent = 2.0;
    std::size_t max_modes = 200'000;
};

double default_width_exponent(int n);

/// Star k with 0 < |k| <= |ln eps|^cutoff_exponent. Throws std::length_error past max_modes.
std::vector<WaveVector> resonant_modes(double eps, int n, double cutoff_exponent = 2.0,
                                       std::size_t max_modes = 200'000);

/// sqrt(eps) |ln eps|^width_exponent (default exponent 2n + 6).
double zone_width(double eps, int n, std::optional<double> width_exponent = std::nullopt);

enum class Zone { B0, B1, B2 };
const char* to_string(Zone z);

struct PointZone {
    Zone zone = Zone::B0;
    /// Index of the resonant mode for B1; the mode with the smallest |y.k| otherwise (-1 if no modes).
    int mode = -1;
    /// |y.k| for that mode.
    double margin = 0.0;
};

struct ZoneDecomposition {
    double epsilon = 0.0;
    int n = 0;
    std::vector<WaveVector> modes;
    double width = 0.0;

    /// Boundary points count as resonant.
    PointZone classify(std::span<const double> y) const;
};

ZoneDecomposition make_zones(double eps, int n, const ZoneConfig& cfg = {});

struct ZoneMeasures {
    std::size_t samples = 0;
    std::size_t count[3] = {0, 0, 0};
    double fraction[3] = {0, 0, 0};
    Interval interval[3] = {};
};

/// Monte Carlo fractions of B0/B1/B2 in B; sample i uses sub-stream i of seed.
ZoneMeasures zone_measures(const ZoneDecomposition& zones, const ActionRegion& B, std::size_t N, std::uint64_t seed,
                           unsigned threads = 1);

/// Uniform point of B from the sub-stream `stream` of `seed`.
void sample_point(const ActionRegion& B, std::uint64_t seed, std::uint64_t stream, std::span<double> y);

} // namespace kam
