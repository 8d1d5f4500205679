#include "fprom/calibrate.hpp"

#include <cmath>
#include <random>

#include "fprom/error.hpp"
#include "fprom/nelder_mead.hpp"
#include "fprom/parallel.hpp"

namespace fprom {

void CalibrationProblem::validate() const {
    require(drift_degree >= 0 && drift_degree <= 3 && diffusion_degree >= 0 && diffusion_degree <= 3,
            "coefficient polynomial degrees must be in 0..3");
    require(!targets.empty(), "calibration needs at least one target density");
    double previous = initial.time();
    for (const auto& target : targets) {
        require(target.time > previous, "target times must increase strictly after the initial time");
        require(target.density.grid() == initial.grid(), "target density grid differs from the initial grid");
        steps_to(initial.time(), target.time, solver.dt);
        previous = target.time;
    }
    if (!weights.empty()) {
        require(weights.size() == targets.size(), "one weight per target is required");
        double total = 0.0;
        for (double w : weights) {
            require(std::isfinite(w) && w >= 0.0, "weights must be finite and non-negative");
            total += w;
        }
        require(total > 0.0, "weights must not all be zero");
    }
    require(bounds.size() == n_params(), "one bound pair per parameter is required");
    for (const auto& b : bounds) {
        require(std::isfinite(b.lower) && std::isfinite(b.upper), "parameter bounds must be finite");
        require(b.lower < b.upper, "parameter bounds have zero measure");
    }
}

CoefficientModel CalibrationProblem::model_for(std::span<const double> params) const {
    require(params.size() == n_params(), "parameter vector has the wrong length");
    const auto split = static_cast<std::size_t>(drift_degree + 1);
    return CoefficientModel(std::vector<double>(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(split)),
                            std::vector<double>(params.begin() + static_cast<std::ptrdiff_t>(split), params.end()));
}

double loss(const CalibrationProblem& problem, std::span<const double> params) {
    require(params.size() == problem.n_params(), "parameter vector has the wrong length");
    require(problem.bounds.size() == params.size(), "one bound pair per parameter is required");

    double violation = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!std::isfinite(params[i])) return kLossPenalty * 2.0;
        violation += std::max(0.0, problem.bounds[i].lower - params[i]);
        violation += std::max(0.0, params[i] - problem.bounds[i].upper);
    }
    if (violation > 0.0) return kLossPenalty + violation;
    return model_loss(problem, problem.model_for(params));
}

double model_loss(const CalibrationProblem& problem, const CoefficientModel& model) {
    const double t0 = problem.initial.time();
    const double t_end = problem.targets.back().time;
    if (!problem.solver.allow_negative_diffusion) {
        const double lo = model.min_diffusion(t0, t_end);
        if (lo < 0.0) return kLossPenalty - lo;
    }

    SolverConfig config = problem.solver;
    config.record_times.clear();
    for (const auto& target : problem.targets) config.record_times.push_back(target.time);

    SolutionTrace trace;
    try {
        trace = solve(problem.initial, model, config);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::input) throw;
        return kLossPenalty;
    }
    if (trace.diverged || trace.snapshots.size() != problem.targets.size()) return kLossPenalty;

    double total = 0.0;
    for (std::size_t j = 0; j < problem.targets.size(); ++j) {
        const double w = problem.weights.empty() ? 1.0 : problem.weights[j];
        if (w == 0.0) continue;
        const auto& observed = problem.targets[j].density;
        const auto& predicted = trace.snapshots[j];
        const double d = problem.distance == Distance::kl ? kl_divergence(observed, predicted)
                                                          : l2_distance(observed, predicted);
        total += w * d;
    }
    return total;
}

namespace {

std::vector<double> to_params(const CalibrationProblem& problem, std::span<const double> unit) {
    std::vector<double> p(unit.size());
    for (std::size_t i = 0; i < unit.size(); ++i) {
        const auto& b = problem.bounds[i];
        p[i] = b.lower + unit[i] * (b.upper - b.lower);
    }
    return p;
}

}  // namespace

CalibrationResult calibrate(const CalibrationProblem& problem, OptimizerKind optimizer, std::size_t budget,
                            std::uint64_t seed, unsigned threads) {
    problem.validate();
    require(budget >= 50, "calibration budget must be at least 50 evaluations");

    const std::size_t dim = problem.n_params();
    const Objective objective = [&](std::span<const double> unit) { return loss(problem, to_params(problem, unit)); };

    std::vector<std::vector<double>> starts;
    if (optimizer == OptimizerKind::nelder_mead) {
        starts.emplace_back(dim, 0.5);
    } else {
        std::mt19937_64 engine(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t s = 0; s < kMultistartCount; ++s) {
            std::vector<double> x(dim);
            for (double& v : x) v = unit(engine);
            starts.push_back(std::move(x));
        }
    }

    std::vector<OptimizationTrace> runs(starts.size());
    parallel_for(starts.size(), threads, [&](std::size_t s) {
        NelderMeadOptions options;
        options.budget = budget / starts.size() + (s < budget % starts.size() ? 1 : 0);
        runs[s] = nelder_mead(objective, starts[s], options);
    });

    CalibrationResult result;
    std::size_t winner = 0;
    double running_best = INFINITY;
    for (std::size_t s = 0; s < runs.size(); ++s) {
        if (runs[s].best_value < runs[winner].best_value) winner = s;
        for (double v : runs[s].history) {
            running_best = std::min(running_best, v);
            result.loss_history.push_back(running_best);
        }
        result.evaluations += runs[s].evaluations;
    }
    result.params = to_params(problem, runs[winner].best_point);
    result.model = problem.model_for(result.params);
    result.final_loss = loss(problem, result.params);
    result.status = runs[winner].converged ? CalibrationStatus::converged : CalibrationStatus::budget_exhausted;
    return result;
}

std::string to_string(OptimizerKind kind) {
    return kind == OptimizerKind::nelder_mead ? "nelder_mead" : "random_multistart_nelder_mead";
}

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "nelder_mead") return OptimizerKind::nelder_mead;
    if (name == "random_multistart_nelder_mead") return OptimizerKind::random_multistart_nelder_mead;
    throw_input("unknown optimizer '" + name + "'");
}

std::string to_string(Distance d) { return d == Distance::kl ? "kl" : "l2"; }

Distance parse_distance(const std::string& name) {
    if (name == "kl") return Distance::kl;
    if (name == "l2") return Distance::l2;
    throw_input("unknown distance '" + name + "'");
}

}  // namespace fprom
