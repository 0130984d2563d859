#include "kam/potential_io.hpp"

#include <fstream>
#include <stdexcept>

namespace kam {

nlohmann::json potential_to_json(const FourierPotential& f) {
    nlohmann::json j;
    j["n"] = f.dim();
    j["s"] = f.width();
    j["tail"] = {{"kind", f.tail().kind == Tail::Kind::floor ? "floor" : "zero"}, {"delta0", f.tail().delta0}};
    auto modes = nlohmann::json::array();
    for (const auto& [k, c] : f.modes()) {
        std::vector<int> comps(k.components().begin(), k.components().end());
        modes.push_back({{"k", comps}, {"re", c.real()}, {"im", c.imag()}});
    }
    j["modes"] = std::move(modes);
    if (f.k_max()) j["k_max"] = *f.k_max();
    return j;
}

FourierPotential potential_from_json(const nlohmann::json& j) {
    try {
        const int n = j.at("n").get<int>();
        const double s = j.at("s").get<double>();
        Tail tail;
        if (j.contains("tail")) {
            const auto kind = j.at("tail").at("kind").get<std::string>();
            if (kind == "floor") tail = Tail::floor(j.at("tail").at("delta0").get<double>());
            else if (kind != "zero") throw std::invalid_argument("unknown tail kind '" + kind + "'");
        }
        FourierPotential::ModeMap modes;
        for (const auto& m : j.at("modes")) {
            WaveVector k(m.at("k").get<std::vector<int>>());
            const Complex c(m.value("re", 0.0), m.value("im", 0.0));
            if (!modes.emplace(k, c).second) throw std::invalid_argument("duplicate mode " + k.str());
        }
        std::optional<int> k_max;
        if (j.contains("k_max")) k_max = j.at("k_max").get<int>();
        return FourierPotential(n, s, std::move(modes), tail, k_max);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed potential: ") + e.what());
    }
}

FourierPotential load_potential(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open potential file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("malformed potential file '" + path + "': " + e.what());
    }
    return potential_from_json(j);
}

void save_potential(const FourierPotential& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write potential file '" + path + "'");
    out << potential_to_json(f).dump(2) << "\n";
}

} // namespace kam
