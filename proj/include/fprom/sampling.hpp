#pragma once

#include <cstdint>
#include <vector>

#include "fprom/density.hpp"
#include "fprom/transform.hpp"

namespace fprom {

struct RejectionStats {
    std::size_t proposals = 0;
    std::size_t accepted = 0;
    double envelope = 0.0;  // M = max f * (x_max - x_min) * (1 + 1e-9)
};

/**
 * Draws n samples from the piecewise-linear interpolant of f using uniform
 * proposals over the grid and the global-max envelope.
 * Deterministic for a fixed seed. Throws Error(infeasible) for an all-zero
 * density or n == 0.
 */
std::vector<double> rejection_sample(const DensityField& f, std::size_t n, std::uint64_t seed,
                                     RejectionStats* stats = nullptr);

/**
 * Density of the inverse-transformed variable: rejection-sample f, map each
 * sample through transform.inverse_x, then KDE on target_grid.
 */
DensityField pushforward_density(const DensityField& f, const TransformSpec& transform, const Grid& target_grid,
                                 std::size_t n_samples, std::uint64_t seed);

}  // namespace fprom
