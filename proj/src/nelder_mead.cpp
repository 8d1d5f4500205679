#include "fprom/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fprom/error.hpp"

namespace fprom {

namespace {

class CountedObjective {
public:
    CountedObjective(const Objective& f, const NelderMeadOptions& options, OptimizationTrace& trace)
        : f_(f), options_(options), trace_(trace) {}

    bool exhausted() const { return trace_.evaluations >= options_.budget; }

    double operator()(std::vector<double>& x) {
        for (double& v : x) v = std::clamp(v, options_.lower, options_.upper);
        double value = f_(x);
        if (std::isnan(value)) value = INFINITY;
        ++trace_.evaluations;
        if (trace_.history.empty() || value < trace_.best_value) {
            trace_.best_value = value;
            trace_.best_point = x;
        }
        trace_.history.push_back(trace_.best_value);
        return value;
    }

private:
    const Objective& f_;
    const NelderMeadOptions& options_;
    OptimizationTrace& trace_;
};

}  // namespace

OptimizationTrace nelder_mead(const Objective& f, std::vector<double> start, const NelderMeadOptions& options) {
    require(!start.empty(), "optimizer needs at least one parameter");
    require(options.budget >= start.size() + 1, "budget too small to build the initial simplex");
    require(options.lower < options.upper, "optimizer box has zero measure");

    const std::size_t dim = start.size();
    OptimizationTrace trace;
    CountedObjective eval(f, options, trace);

    std::vector<std::vector<double>> simplex(dim + 1, start);
    std::vector<double> values(dim + 1);
    values[0] = eval(simplex[0]);
    for (std::size_t i = 0; i < dim; ++i) {
        auto& v = simplex[i + 1];
        v[i] += options.initial_step;
        if (v[i] > options.upper) v[i] = simplex[0][i] - options.initial_step;
        values[i + 1] = eval(v);
    }

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), trial(dim), trial2(dim);
    auto blend = [&](const std::vector<double>& a, const std::vector<double>& b, double coef,
                     std::vector<double>& out) {
        for (std::size_t j = 0; j < dim; ++j) out[j] = a[j] + coef * (b[j] - a[j]);
    };

    while (!eval.exhausted()) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[dim - 1];

        double size = 0.0;
        for (std::size_t i = 0; i <= dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) size = std::max(size, std::abs(simplex[i][j] - simplex[best][j]));
        }
        if (size < options.tolerance) {
            trace.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j] / static_cast<double>(dim);
        }

        // reflection
        blend(centroid, simplex[worst], -1.0, trial);
        const double reflected = eval(trial);
        if (reflected < values[best]) {
            if (eval.exhausted()) {
                simplex[worst] = trial;
                values[worst] = reflected;
                break;
            }
            blend(centroid, simplex[worst], -2.0, trial2);
            const double expanded = eval(trial2);
            if (expanded < reflected) {
                simplex[worst] = trial2;
                values[worst] = expanded;
            } else {
                simplex[worst] = trial;
                values[worst] = reflected;
            }
            continue;
        }
        if (reflected < values[second_worst]) {
            simplex[worst] = trial;
            values[worst] = reflected;
            continue;
        }
        if (eval.exhausted()) break;

        // contraction (outside if the reflection improved on the worst vertex)
        const bool outside = reflected < values[worst];
        blend(centroid, outside ? trial : simplex[worst], 0.5, trial2);
        const double contracted = eval(trial2);
        if (contracted < std::min(reflected, values[worst])) {
            simplex[worst] = trial2;
            values[worst] = contracted;
            continue;
        }

        // shrink toward the best vertex
        for (std::size_t i = 0; i <= dim && !eval.exhausted(); ++i) {
            if (i == best) continue;
            blend(simplex[best], simplex[i], 0.5, simplex[i]);
            values[i] = eval(simplex[i]);
        }
    }
    return trace;
}

}  // namespace fprom
