#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <type_traits>
#include <string>
#include <vector>

namespace kamtool {

namespace fs = std::filesystem;

/// Thrown for results that exist but fail a numeric-quality gate (exit code 3).
struct QualityFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// CSV with a fixed header; doubles are written with 17 significant digits.
class Csv {
public:
    Csv(const fs::path& path, std::initializer_list<std::string> header);

    template <class... T>
    void row(const T&... v) {
        bool first = true;
        ((put(v, first), first = false), ...);
        out_ << '\n';
    }

private:
    void put(double v, bool first);
    void put(const std::string& v, bool first);
    void put(const char* v, bool first) { put(std::string(v), first); }
    template <class I>
        requires std::is_integral_v<I>
    void put(I v, bool first) {
        if (!first) out_ << ',';
        out_ << v;
    }

    std::ofstream out_;
};

void write_json(const fs::path& path, const nlohmann::json& j);

struct Series {
    std::string label;
    std::string color;
    std::vector<double> x;
    std::vector<double> y;
    /// Points instead of a polyline.
    bool scatter = false;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
};

/// Minimal SVG chart: axes with end labels, one polyline or point set per series, legend.
void write_svg(const fs::path& path, const PlotSpec& spec, const std::vector<Series>& series);

} // namespace kamtool
