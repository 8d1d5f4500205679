#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fprom/grid.hpp"
#include "test_util.hpp"

using namespace fprom;

TEST(Grid, UnitIntervalWithElevenNodes) {
    const auto g = build_grid(0.0, 1.0, 11);
    EXPECT_DOUBLE_EQ(g.spacing(), 0.1);
    EXPECT_NEAR(g.node(5), 0.5, 1e-15);
    EXPECT_EQ(g.size(), 11u);
}

TEST(Grid, SymmetricDomainSpacing) {
    const auto g = build_grid(-5.0, 5.0, 8);
    EXPECT_NEAR(g.spacing(), 10.0 / 7.0, 1e-15);
    EXPECT_NEAR(g.node(7), 5.0, 1e-14);
}

TEST(Grid, RejectsBadDomains) {
    EXPECT_FPROM_ERROR(build_grid(1.0, 1.0, 16), ErrorKind::infeasible);
    EXPECT_FPROM_ERROR(build_grid(2.0, 1.0, 16), ErrorKind::infeasible);
    EXPECT_FPROM_ERROR(build_grid(0.0, 1.0, 7), ErrorKind::infeasible);
    EXPECT_FPROM_ERROR(build_grid(0.0, INFINITY, 16), ErrorKind::infeasible);
    EXPECT_FPROM_ERROR(build_grid(NAN, 1.0, 16), ErrorKind::infeasible);
}

TEST(Grid, NodesAreExactMultiplesOfSpacing) {
    const auto g = build_grid(-3.0, 7.0, 1001);
    const auto nodes = g.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double expected = -3.0 + static_cast<double>(i) * g.spacing();
        EXPECT_NEAR(nodes[i], expected, 4.0 * std::abs(expected) * 1e-16 + 1e-15);
    }
}

TEST(Grid, TrapezoidWeightsIntegrateConstants) {
    const auto g = build_grid(0.0, 2.0, 33);
    double total = 0.0;
    for (double w : g.trapezoid_weights()) total += w;
    EXPECT_NEAR(total, 2.0, 1e-14);
}

TEST(DerivativeMatrix, CentredFirstDerivativeStencil) {
    const auto g = build_grid(0.0, 1.0, 11);
    const auto e = derivative_matrix(g, 1, 2);
    const auto w = e.row_weights(5);
    ASSERT_EQ(w.size(), 3u);
    EXPECT_EQ(e.row_start(5), 4u);
    EXPECT_NEAR(w[0], -5.0, 1e-12);
    EXPECT_NEAR(w[1], 0.0, 1e-12);
    EXPECT_NEAR(w[2], 5.0, 1e-12);
}

TEST(DerivativeMatrix, CentredSecondDerivativeStencil) {
    const auto g = build_grid(0.0, 1.0, 11);
    const auto e = derivative_matrix(g, 2, 2);
    const auto w = e.row_weights(5);
    ASSERT_EQ(w.size(), 3u);
    EXPECT_NEAR(w[0], 100.0, 1e-10);
    EXPECT_NEAR(w[1], -200.0, 1e-10);
    EXPECT_NEAR(w[2], 100.0, 1e-10);
}

TEST(DerivativeMatrix, FourthOrderFirstDerivativeOfQuartic) {
    const auto g = build_grid(0.0, 1.0, 64);
    const auto e = derivative_matrix(g, 1, 4);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::pow(g.node(i), 4);
    const auto df = e.apply(f);
    const std::size_t hw = e.interior_half_width();
    double worst = 0.0;
    for (std::size_t i = hw; i + hw < g.size(); ++i) {
        const double x = g.node(i);
        const double exact = 4.0 * x * x * x;
        worst = std::max(worst, std::abs(df[i] - exact) / std::max(1.0, std::abs(exact)));
    }
    EXPECT_LE(worst, 1e-8);
}

TEST(DerivativeMatrix, RejectsStencilWiderThanGrid) {
    const auto g = build_grid(0.0, 1.0, 8);
    EXPECT_FPROM_ERROR(derivative_matrix(g, 2, 6), ErrorKind::infeasible);
    EXPECT_FPROM_ERROR(derivative_matrix(g, 1, 3), ErrorKind::infeasible);
    EXPECT_FPROM_ERROR(derivative_matrix(g, 0, 2), ErrorKind::infeasible);
}

struct DegreeOrder {
    int degree;
    int order;
};

class DerivativeProperties : public ::testing::TestWithParam<DegreeOrder> {};

// Monomials up to degree d + p - 1 are differentiated exactly, on every row
// (the one-sided boundary rows are exact to the same degree).
TEST_P(DerivativeProperties, PolynomialExactness) {
    const auto [d, p] = GetParam();
    const auto g = build_grid(-1.0, 1.5, 40);
    const auto e = derivative_matrix(g, d, p);
    const double hd = std::pow(g.spacing(), d);
    for (int m = 0; m < d + p; ++m) {
        std::vector<double> f(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::pow(g.node(i), m);
        const auto df = e.apply(f);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = g.node(i);
            double exact = 0.0;
            if (m >= d) {
                double falling = 1.0;
                for (int k = 0; k < d; ++k) falling *= m - k;
                exact = falling * std::pow(x, m - d);
            }
            EXPECT_NEAR(df[i] * hd, exact * hd, 1e-8 * std::max(1.0, std::abs(exact * hd)))
                << "d=" << d << " p=" << p << " m=" << m << " i=" << i;
        }
    }
}

TEST_P(DerivativeProperties, RowsSumToZero) {
    const auto [d, p] = GetParam();
    const auto g = build_grid(0.0, 3.0, 50);
    const auto dense = derivative_matrix(g, d, p).to_dense();
    const double scale = std::pow(g.spacing(), d);
    for (Eigen::Index r = 0; r < dense.rows(); ++r) EXPECT_NEAR(dense.row(r).sum() * scale, 0.0, 1e-10);
}

TEST_P(DerivativeProperties, ConvergenceOrderOnSine) {
    const auto [d, p] = GetParam();
    auto interior_error = [&](std::size_t n) {
        const auto g = build_grid(0.0, 2.0, n);
        const auto e = derivative_matrix(g, d, p);
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = std::sin(g.node(i));
        const auto df = e.apply(f);
        const std::size_t hw = e.interior_half_width();
        double worst = 0.0;
        for (std::size_t i = hw; i + hw < n; ++i) {
            const double x = g.node(i);
            const double exact = d == 1 ? std::cos(x) : d == 2 ? -std::sin(x) : d == 3 ? -std::cos(x) : std::sin(x);
            worst = std::max(worst, std::abs(df[i] - exact));
        }
        return worst;
    };
    const double coarse = interior_error(41);
    const double fine = interior_error(81);
    EXPECT_GE(coarse / fine, std::pow(2.0, p - 0.5)) << "d=" << d << " p=" << p;
}

INSTANTIATE_TEST_SUITE_P(DegreesAndOrders, DerivativeProperties,
                         ::testing::Values(DegreeOrder{1, 2}, DegreeOrder{1, 4}, DegreeOrder{1, 6}, DegreeOrder{2, 2},
                                           DegreeOrder{2, 4}, DegreeOrder{3, 2}, DegreeOrder{4, 2}));

TEST(DerivativeMatrix, IsSafeToShareAcrossCopies) {
    const auto g = build_grid(0.0, 1.0, 16);
    const auto a = derivative_matrix(g, 1, 2);
    const auto b = a;
    EXPECT_TRUE(a.to_dense().isApprox(b.to_dense()));
}
