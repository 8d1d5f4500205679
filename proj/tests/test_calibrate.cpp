#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fprom/analytic.hpp"
#include "fprom/calibrate.hpp"
#include "fprom/nelder_mead.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fprom;

namespace {

SolverConfig cn(double dt) {
    SolverConfig c;
    c.dt = dt;
    return c;
}

// Targets produced by the solver itself from a Gaussian start.
CalibrationProblem self_generated(double drift, double diffusion) {
    const auto g = Grid::uniform(-6.0, 10.0, 257);
    const auto initial = DensityField::from_function(g, [](double x) { return oracle::normal_pdf(x, 0.0, 0.5); }, 0.0);
    auto cfg = cn(0.01);
    cfg.record_times = {0.5, 1.0};
    const auto trace = solve(initial, CoefficientModel::constant(drift, diffusion), cfg);
    CalibrationProblem p{initial, {}, {}, 0, 0, {{-2.0, 2.0}, {0.0, 1.0}}, cn(0.01), Distance::kl};
    for (const auto& s : trace.snapshots) p.targets.push_back({s.time(), s});
    return p;
}

}  // namespace

TEST(Loss, TrueParametersOnSelfGeneratedTargets) {
    const auto p = self_generated(0.8, 0.3);
    const std::vector<double> truth{0.8, 0.3};
    EXPECT_LT(loss(p, truth), 1e-3);
    const std::vector<double> wrong{0.2, 0.6};
    EXPECT_GT(loss(p, wrong), loss(p, truth));
}

TEST(Loss, NoEvolutionNeeded) {
    const auto g = Grid::uniform(-5.0, 5.0, 129);
    const auto f = DensityField::from_function(g, [](double x) { return oracle::normal_pdf(x, 0.0, 1.0); }, 0.0);
    CalibrationProblem p{f, {{0.5, f.with_time(0.5)}}, {}, 0, 0, {{-1, 1}, {0, 1}}, cn(0.1), Distance::kl};
    EXPECT_NEAR(loss(p, std::vector<double>{0.0, 0.0}), 0.0, 1e-10);
}

TEST(Loss, NegativeDiffusionIsPenalized) {
    auto p = self_generated(0.5, 0.2);
    p.bounds = {{-1.0, 1.0}, {-1.0, 1.0}};
    const double l = loss(p, std::vector<double>{0.5, -0.1});
    EXPECT_GE(l, kLossPenalty);
    EXPECT_TRUE(std::isfinite(l));
}

TEST(Loss, OutOfBoundsIsPenalizedByViolation) {
    const auto p = self_generated(0.5, 0.2);
    const double a = loss(p, std::vector<double>{3.0, 0.2});
    const double b = loss(p, std::vector<double>{4.0, 0.2});
    EXPECT_GE(a, kLossPenalty);
    EXPECT_GT(b, a);
}

TEST(Loss, DeterministicBitForBit) {
    const auto p = self_generated(0.4, 0.25);
    const std::vector<double> x{0.33, 0.21};
    EXPECT_EQ(loss(p, x), loss(p, x));
}

TEST(Loss, L2DistanceOption) {
    auto p = self_generated(0.8, 0.3);
    p.distance = Distance::l2;
    EXPECT_LT(loss(p, std::vector<double>{0.8, 0.3}), 1e-6);
    EXPECT_GT(loss(p, std::vector<double>{0.0, 0.3}), 1e-3);
}

TEST(Loss, WeightsScaleContributions) {
    auto p = self_generated(0.8, 0.3);
    const std::vector<double> x{0.5, 0.3};
    const double uniform = loss(p, x);
    p.weights = {2.0, 2.0};
    EXPECT_NEAR(loss(p, x), 2.0 * uniform, 1e-12 * uniform);
}

TEST(Problem, MalformedProblemsAreRejected) {
    auto p = self_generated(0.5, 0.2);
    p.bounds = {{0.0, 0.0}, {0.0, 1.0}};
    EXPECT_FPROM_ERROR(p.validate(), ErrorKind::infeasible);
    p = self_generated(0.5, 0.2);
    p.weights = {0.0, 0.0};
    EXPECT_FPROM_ERROR(p.validate(), ErrorKind::infeasible);
    p = self_generated(0.5, 0.2);
    p.targets[0].time = 0.505;  // not a multiple of dt
    EXPECT_FPROM_ERROR(p.validate(), ErrorKind::infeasible);
    p = self_generated(0.5, 0.2);
    std::swap(p.targets[0], p.targets[1]);
    EXPECT_FPROM_ERROR(p.validate(), ErrorKind::infeasible);
}

TEST(Calibrate, RecoversF3Coefficients) {
    const auto g = Grid::uniform(-10.0, 20.0, 513);
    const auto initial = analytic::f3_density(g, 1.0, 1.0, 0.5);
    CalibrationProblem p{initial,
                         {{1.5, analytic::f3_density(g, 1.5, 1.0, 0.5)}, {2.0, analytic::f3_density(g, 2.0, 1.0, 0.5)}},
                         {},
                         0,
                         0,
                         {{0.0, 3.0}, {0.0, 2.0}},
                         cn(1e-2),
                         Distance::kl};
    const auto r = calibrate(p, OptimizerKind::nelder_mead, 300);
    EXPECT_NEAR(r.params[0], 1.0, 0.02);
    EXPECT_NEAR(r.params[1], 0.5, 0.01);
}

TEST(Calibrate, SmallBudgetStillValid) {
    const auto p = self_generated(0.8, 0.3);
    const auto r = calibrate(p, OptimizerKind::nelder_mead, 50);
    EXPECT_LE(r.evaluations, 50u);
    ASSERT_FALSE(r.loss_history.empty());
    for (std::size_t i = 1; i < r.loss_history.size(); ++i) EXPECT_LE(r.loss_history[i], r.loss_history[i - 1]);
    EXPECT_EQ(r.params.size(), 2u);
    EXPECT_NEAR(r.final_loss, loss(p, r.params), 1e-10);
}

TEST(Calibrate, SelfConsistentWithinBudget) {
    const auto p = self_generated(-0.7, 0.45);
    for (auto opt : {OptimizerKind::nelder_mead, OptimizerKind::random_multistart_nelder_mead}) {
        const auto r = calibrate(p, opt, 500, 3);
        EXPECT_LE(r.evaluations, 500u);
        EXPECT_LE(r.final_loss, 1e-3);
        EXPECT_NEAR(r.final_loss, loss(p, r.params), 1e-10);
        EXPECT_EQ(r.model, CoefficientModel::constant(r.params[0], r.params[1]));
    }
}

TEST(Calibrate, MultistartIsDeterministicAcrossThreadCounts) {
    const auto p = self_generated(0.3, 0.2);
    const auto a = calibrate(p, OptimizerKind::random_multistart_nelder_mead, 160, 42, 1);
    const auto b = calibrate(p, OptimizerKind::random_multistart_nelder_mead, 160, 42, 4);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.loss_history, b.loss_history);
    EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(Calibrate, RejectsTinyBudgetAndZeroMeasureBounds) {
    auto p = self_generated(0.5, 0.2);
    EXPECT_FPROM_ERROR(calibrate(p, OptimizerKind::nelder_mead, 49), ErrorKind::infeasible);
    p.bounds[1] = {0.3, 0.3};
    EXPECT_FPROM_ERROR(calibrate(p, OptimizerKind::nelder_mead, 100), ErrorKind::infeasible);
}

TEST(Calibrate, TimeDependentDrift) {
    const auto g = Grid::uniform(-6.0, 12.0, 257);
    const auto initial = DensityField::from_function(g, [](double x) { return oracle::normal_pdf(x, 0.0, 0.5); }, 0.0);
    const CoefficientModel truth({0.5, 1.0}, {0.3});
    auto cfg = cn(0.01);
    cfg.record_times = {0.5, 1.0, 1.5, 2.0};
    const auto trace = solve(initial, truth, cfg);
    CalibrationProblem p{initial, {}, {}, 1, 0, {{-2.0, 2.0}, {-2.0, 2.0}, {0.0, 1.0}}, cn(0.01), Distance::kl};
    for (const auto& s : trace.snapshots) p.targets.push_back({s.time(), s});
    const auto r = calibrate(p, OptimizerKind::nelder_mead, 600);
    EXPECT_NEAR(r.params[0], 0.5, 0.05);
    EXPECT_NEAR(r.params[1], 1.0, 0.05);
    EXPECT_NEAR(r.params[2], 0.3, 0.02);
}

TEST(NelderMead, MinimizesShiftedQuadratic) {
    const Objective f = [](std::span<const double> x) {
        return (x[0] - 0.3) * (x[0] - 0.3) + 10.0 * (x[1] - 0.8) * (x[1] - 0.8);
    };
    const auto t = nelder_mead(f, {0.5, 0.5}, {});
    EXPECT_TRUE(t.converged);
    EXPECT_NEAR(t.best_point[0], 0.3, 1e-5);
    EXPECT_NEAR(t.best_point[1], 0.8, 1e-5);
    EXPECT_EQ(t.history.size(), t.evaluations);
}

TEST(NelderMead, StaysInsideBox) {
    const Objective f = [](std::span<const double> x) {
        EXPECT_GE(x[0], 0.0);
        EXPECT_LE(x[0], 1.0);
        return -x[0];
    };
    const auto t = nelder_mead(f, {0.5}, {});
    EXPECT_NEAR(t.best_point[0], 1.0, 1e-6);
}

TEST(Parse, OptimizerAndDistance) {
    EXPECT_EQ(parse_optimizer("random_multistart_nelder_mead"), OptimizerKind::random_multistart_nelder_mead);
    EXPECT_EQ(parse_distance("l2"), Distance::l2);
    EXPECT_FPROM_ERROR(parse_optimizer("bayesian"), ErrorKind::input);
    EXPECT_FPROM_ERROR(parse_distance("wasserstein"), ErrorKind::input);
}
