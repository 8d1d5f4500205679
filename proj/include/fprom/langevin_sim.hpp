#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fprom/density.hpp"
#include "fprom/km_estimate.hpp"

namespace fprom {

enum class DriftKind { constant, linear_in_t, linear_in_x, ornstein_uhlenbeck };
enum class NoiseKind { constant, linear_in_x };

/**
 * Ito SDE dx = h(x, t) dt + g(x, t) dW.
 *
 *   constant:            h = p0
 *   linear_in_t:         h = p0 + p1 t
 *   linear_in_x:         h = p0 + p1 x
 *   ornstein_uhlenbeck:  h = p0 (p1 - x)       (rate, mean)
 *   noise constant:      g = q0
 *   noise linear_in_x:   g = q0 + q1 x         (must stay >= 0)
 *
 * A constant diffusion coefficient D corresponds to g = sqrt(2 D).
 */
struct SdeSpec {
    DriftKind drift = DriftKind::constant;
    std::array<double, 2> drift_params{0.0, 0.0};
    NoiseKind noise = NoiseKind::constant;
    std::array<double, 2> noise_params{1.0, 0.0};

    double h(double x, double t) const;
    double g(double x, double t) const;
};

struct InitialCondition {
    enum class Kind { point, normal } kind = Kind::point;
    double mean = 0.0;
    double stddev = 0.0;
};

struct SimPlan {
    std::size_t n_trajectories = 1000;
    double dt = 1e-3;
    double horizon = 1.0;
    std::size_t stride = 1;
    InitialCondition x0{};
    std::uint64_t seed = 0;
    double t_start = 0.0;
    unsigned threads = 0;  // 0 = hardware concurrency
};

/// Statistics of the standard normal draws used by one simulate() call.
struct NoiseStats {
    std::size_t draws = 0;
    double mean = 0.0;
    double variance = 0.0;
};

/**
 * Euler-Maruyama ensemble, recorded every `stride` steps.
 *
 * Each trajectory owns a generator keyed on (seed, trajectory index), so the
 * output is bit-identical for any thread count. Throws Error(divergence) if
 * a state becomes non-finite and Error(infeasible) for an invalid plan or
 * negative noise amplitude.
 */
TrajectoryEnsemble simulate(const SdeSpec& spec, const SimPlan& plan, NoiseStats* noise = nullptr);

/// KDE density of the ensemble at each requested time (must lie on the time axis).
std::vector<DensityField> ensemble_to_densities(const TrajectoryEnsemble& ens, const Grid& grid,
                                                const std::vector<double>& times,
                                                std::optional<double> bandwidth = std::nullopt);

DriftKind parse_drift_kind(const std::string& name);
NoiseKind parse_noise_kind(const std::string& name);

}  // namespace fprom
