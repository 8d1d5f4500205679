#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fprom/coefficients.hpp"
#include "fprom/density.hpp"
#include "fprom/fpe_solver.hpp"

namespace fprom {

enum class Distance { kl, l2 };
enum class OptimizerKind { nelder_mead, random_multistart_nelder_mead };

struct ParameterBounds {
    double lower = 0.0;
    double upper = 0.0;
};

struct CalibrationTarget {
    double time = 0.0;
    DensityField density;
};

/**
 * Inverse problem: find drift/diffusion polynomial coefficients whose forward
 * solution from `initial` matches each target density.
 *
 * Parameter vector layout: drift coefficients (drift_degree + 1, increasing
 * powers of t) followed by diffusion coefficients (diffusion_degree + 1).
 * solver.record_times is ignored; the target times are used instead.
 */
struct CalibrationProblem {
    DensityField initial;
    std::vector<CalibrationTarget> targets;
    std::vector<double> weights;  // empty means uniform
    int drift_degree = 0;
    int diffusion_degree = 0;
    std::vector<ParameterBounds> bounds;
    SolverConfig solver;
    Distance distance = Distance::kl;

    std::size_t n_params() const {
        return static_cast<std::size_t>(drift_degree + 1 + diffusion_degree + 1);
    }

    /// Throws Error(infeasible) if the problem is malformed.
    void validate() const;

    CoefficientModel model_for(std::span<const double> params) const;
};

/// Added to every infeasible or diverged evaluation.
inline constexpr double kLossPenalty = 1e6;

/// Weighted sum of distances between targets and forward predictions.
/// Infeasible parameters yield kLossPenalty + violation magnitude instead of throwing.
double loss(const CalibrationProblem& problem, std::span<const double> params);

/// loss() for a ready-made model, skipping the bound checks.
double model_loss(const CalibrationProblem& problem, const CoefficientModel& model);

enum class CalibrationStatus { converged, budget_exhausted };

struct CalibrationResult {
    CoefficientModel model;
    std::vector<double> params;
    double final_loss = 0.0;
    std::vector<double> loss_history;  // best-so-far, non-increasing
    std::size_t evaluations = 0;
    CalibrationStatus status = CalibrationStatus::budget_exhausted;
};

inline constexpr std::size_t kMultistartCount = 8;

/**
 * Minimizes loss() with Nelder-Mead in coordinates scaled to the bounds.
 * The plain optimizer starts at the box centre; the multistart variant runs
 * kMultistartCount seeded uniform starts concurrently, sharing the budget,
 * and keeps the lowest loss (ties go to the lower start index).
 * Throws Error(infeasible) for budget < 50 or zero-measure bounds.
 */
CalibrationResult calibrate(const CalibrationProblem& problem, OptimizerKind optimizer, std::size_t budget,
                            std::uint64_t seed = 0, unsigned threads = 0);

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(Distance d);
Distance parse_distance(const std::string& name);

}  // namespace fprom
