#pragma once

#include "kam/fourier_potential.hpp"

#include <cmath>
#include <random>

namespace kam::testing {

// Finite random potential inside the unit ball of B_s (test-only generator).
inline FourierPotential random_finite_potential(int n, double s, int max_l1, std::mt19937_64& rng,
                                                double fill = 0.6) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FourierPotential::ModeMap modes;
    for (auto& k : sharp_vectors(n, max_l1)) {
        if (u(rng) > fill) continue;
        const double r = std::sqrt(u(rng)), phi = 2 * M_PI * u(rng);
        modes[k] = std::polar(r, phi) * std::exp(-k.l1() * s);
    }
    return FourierPotential(n, s, std::move(modes));
}

} // namespace kam::testing
