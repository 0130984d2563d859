#include "artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace kamtool {

Csv::Csv(const fs::path& path, std::initializer_list<std::string> header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << std::setprecision(17);
    bool first = true;
    for (const auto& h : header) {
        out_ << (first ? "" : ",") << h;
        first = false;
    }
    out_ << '\n';
}

void Csv::put(double v, bool first) {
    if (!first) out_ << ',';
    if (std::isnan(v)) out_ << "nan";
    else if (std::isinf(v)) out_ << (v > 0 ? "inf" : "-inf");
    else out_ << v;
}

void Csv::put(const std::string& v, bool first) {
    if (!first) out_ << ',';
    // quote fields that carry the separator (wave vectors such as "(1,-1)")
    if (v.find_first_of(",\"") != std::string::npos) {
        out_ << '"';
        for (char c : v) out_ << (c == '"' ? "\"\"" : std::string(1, c));
        out_ << '"';
    } else {
        out_ << v;
    }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

namespace {

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(4) << v;
    return s.str();
}

} // namespace

void write_svg(const fs::path& path, const PlotSpec& spec, const std::vector<Series>& series) {
    constexpr double W = 640, H = 440, L = 70, R = 20, T = 40, B = 60;
    auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
    auto usable = [](double v) { return std::isfinite(v); };

    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double a = tx(s.x[i]), b = ty(s.y[i]);
            if (!usable(a) || !usable(b)) continue;
            x0 = std::min(x0, a);
            x1 = std::max(x1, a);
            y0 = std::min(y0, b);
            y1 = std::max(y1, b);
        }
    if (!(x0 <= x1)) x0 = 0, x1 = 1;
    if (!(y0 <= y1)) y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-300) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-300) y0 -= 0.5, y1 += 0.5;
    auto px = [&](double a) { return L + (a - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double b) { return H - B - (b - y0) / (y1 - y0) * (H - T - B); };
    auto label = [](double v, bool log) { return log ? "1e" + fmt(v) : fmt(v); };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << spec.title << "</text>\n";
    out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\">" << label(x0, spec.log_x) << "</text>\n";
    out << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"end\">" << label(x1, spec.log_x)
        << "</text>\n";
    out << "<text x=\"" << L - 6 << "\" y=\"" << H - B << "\" text-anchor=\"end\">" << label(y0, spec.log_y)
        << "</text>\n";
    out << "<text x=\"" << L - 6 << "\" y=\"" << T + 10 << "\" text-anchor=\"end\">" << label(y1, spec.log_y)
        << "</text>\n";
    out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 20 << "\" text-anchor=\"middle\">" << spec.x_label
        << "</text>\n";
    out << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << (T + H - B) / 2 << ")\">" << spec.y_label << "</text>\n";

    double legend_y = T + 16;
    for (const auto& s : series) {
        if (s.scatter) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                const double a = tx(s.x[i]), b = ty(s.y[i]);
                if (!usable(a) || !usable(b)) continue;
                out << "<circle cx=\"" << px(a) << "\" cy=\"" << py(b) << "\" r=\"2\" fill=\"" << s.color << "\"/>\n";
            }
        } else {
            out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                const double a = tx(s.x[i]), b = ty(s.y[i]);
                if (usable(a) && usable(b)) out << px(a) << ',' << py(b) << ' ';
            }
            out << "\"/>\n";
        }
        if (!s.label.empty()) {
            out << "<rect x=\"" << W - R - 150 << "\" y=\"" << legend_y - 9 << "\" width=\"10\" height=\"10\" fill=\""
                << s.color << "\"/>\n";
            out << "<text x=\"" << W - R - 135 << "\" y=\"" << legend_y << "\">" << s.label << "</text>\n";
            legend_y += 16;
        }
    }
    out << "</svg>\n";
}

} // namespace kamtool
