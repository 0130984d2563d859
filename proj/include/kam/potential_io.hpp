#pragma once

#include "kam/fourier_potential.hpp"

#include <json.hpp>

#include <string>

namespace kam {

/// Potential file format:
///   { "n": int, "s": real, "tail": {"kind": "zero"|"floor", "delta0": real},
///     "modes": [ {"k": [ints], "re": real, "im": real} ], "k_max": int (optional) }
/// Modes must be sharp; a repeated k is rejected.
nlohmann::json potential_to_json(const FourierPotential& f);
FourierPotential potential_from_json(const nlohmann::json& j);

FourierPotential load_potential(const std::string& path);
void save_potential(const FourierPotential& f, const std::string& path);

} // namespace kam
