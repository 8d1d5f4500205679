#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

namespace fprom {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/**
 * Uniform 1-D grid on [x_min, x_max].
 *
 * Node i sits at x_min + i*h; coordinates are computed from the index every
 * time so there is no accumulated drift along the grid.
 */
class Grid {
public:
    static constexpr std::size_t min_points = 8;

    /// Throws Error(infeasible) on non-finite bounds, n_points < 8 or x_min >= x_max.
    static Grid uniform(double x_min, double x_max, std::size_t n_points);

    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    std::size_t size() const noexcept { return n_points_; }
    double spacing() const noexcept { return h_; }

    double node(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * h_; }
    std::vector<double> nodes() const;

    /// Trapezoidal quadrature weights (h/2 at both ends, h elsewhere).
    std::vector<double> trapezoid_weights() const;

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    Grid(double x_min, double x_max, std::size_t n_points);

    double x_min_;
    double x_max_;
    std::size_t n_points_;
    double h_;
};

inline Grid build_grid(double x_min, double x_max, std::size_t n_points) {
    return Grid::uniform(x_min, x_max, n_points);
}

/**
 * Finite-difference weights for derivatives of order 0..max_degree at
 * position z using the given nodes (Fornberg's recursion).
 *
 * Returns a (max_degree + 1) x nodes.size() table, row-major:
 * weights[m * nodes.size() + j] is the weight of node j for the m-th
 * derivative.
 */
std::vector<double> fd_weights(double z, std::span<const double> nodes, int max_degree);

/**
 * Derivative operator of a given degree and formal accuracy on a Grid.
 *
 * Interior rows use centred stencils; rows too close to the boundary use
 * one-sided stencils of d + p points, which keep the same formal order.
 * Storage is a row-major sparse matrix, so applying it costs O(n * width).
 */
class DerivativeMatrix {
public:
    int degree() const noexcept { return degree_; }
    int accuracy_order() const noexcept { return accuracy_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }

    const SparseRowMatrix& matrix() const noexcept { return matrix_; }
    Eigen::MatrixXd to_dense() const { return Eigen::MatrixXd(matrix_); }

    /// Column index of the first stencil entry and the weights of row i.
    std::size_t row_start(std::size_t i) const { return row_start_[i]; }
    std::vector<double> row_weights(std::size_t i) const;

    /// Half-width of the centred interior stencil.
    std::size_t interior_half_width() const noexcept { return half_width_; }

    std::vector<double> apply(std::span<const double> values) const;

private:
    friend DerivativeMatrix derivative_matrix(const Grid&, int, int);
    DerivativeMatrix() = default;

    int degree_ = 0;
    int accuracy_ = 0;
    std::size_t half_width_ = 0;
    std::vector<std::size_t> row_start_;
    SparseRowMatrix matrix_;
};

/// Throws Error(infeasible) unless degree >= 1, accuracy_order is even and >= 2,
/// and n_points > degree + accuracy_order with the centred stencil fitting the grid.
DerivativeMatrix derivative_matrix(const Grid& grid, int degree, int accuracy_order);

}  // namespace fprom
