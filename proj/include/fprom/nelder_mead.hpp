#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fprom {

using Objective = std::function<double(std::span<const double>)>;

struct NelderMeadOptions {
    std::size_t budget = 200;          // maximum objective evaluations
    double tolerance = 1e-6;           // stop when every vertex is this close to the best one
    double initial_step = 0.1;
    double lower = 0.0;                // trial points are projected onto [lower, upper]^d
    double upper = 1.0;
};

struct OptimizationTrace {
    std::vector<double> best_point;
    double best_value = 0.0;
    std::vector<double> history;       // best-so-far value after each evaluation
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Downhill simplex minimization of f from `start` inside a box.
OptimizationTrace nelder_mead(const Objective& f, std::vector<double> start, const NelderMeadOptions& options);

}  // namespace fprom
