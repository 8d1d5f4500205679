#include "fprom/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fprom/error.hpp"

namespace fprom {

Grid::Grid(double x_min, double x_max, std::size_t n_points)
    : x_min_(x_min),
      x_max_(x_max),
      n_points_(n_points),
      h_((x_max - x_min) / static_cast<double>(n_points - 1)) {}

Grid Grid::uniform(double x_min, double x_max, std::size_t n_points) {
    require(std::isfinite(x_min) && std::isfinite(x_max), "grid bounds must be finite");
    require(n_points >= min_points,
            "grid needs at least " + std::to_string(min_points) + " points, got " +
                std::to_string(n_points));
    require(x_min < x_max, "degenerate grid domain: x_min must be less than x_max");
    return Grid(x_min, x_max, n_points);
}

std::vector<double> Grid::nodes() const {
    std::vector<double> out(n_points_);
    for (std::size_t i = 0; i < n_points_; ++i) {
        out[i] = node(i);
    }
    return out;
}

std::vector<double> Grid::trapezoid_weights() const {
    std::vector<double> w(n_points_, h_);
    w.front() = 0.5 * h_;
    w.back() = 0.5 * h_;
    return w;
}

std::vector<double> fd_weights(double z, std::span<const double> nodes, int max_degree) {
    const std::size_t n = nodes.size();
    const std::size_t m_count = static_cast<std::size_t>(max_degree) + 1;
    std::vector<double> c(m_count * n, 0.0);
    auto at = [&](std::size_t m, std::size_t j) -> double& { return c[m * n + j]; };

    double c1 = 1.0;
    double c4 = nodes[0] - z;
    at(0, 0) = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t mn = std::min(i, m_count - 1);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - z;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (std::size_t k = mn; k >= 1; --k) {
                    at(k, i) = c1 * (static_cast<double>(k) * at(k - 1, i - 1) - c5 * at(k, i - 1)) / c2;
                }
                at(0, i) = -c1 * c5 * at(0, i - 1) / c2;
            }
            for (std::size_t k = mn; k >= 1; --k) {
                at(k, j) = (c4 * at(k, j) - static_cast<double>(k) * at(k - 1, j)) / c3;
            }
            at(0, j) = c4 * at(0, j) / c3;
        }
        c1 = c2;
    }
    return c;
}

std::vector<double> DerivativeMatrix::row_weights(std::size_t i) const {
    std::vector<double> out;
    for (SparseRowMatrix::InnerIterator it(matrix_, static_cast<Eigen::Index>(i)); it; ++it) {
        out.push_back(it.value());
    }
    return out;
}

std::vector<double> DerivativeMatrix::apply(std::span<const double> values) const {
    require(values.size() == size(), "derivative matrix applied to a vector of the wrong length");
    Eigen::Map<const Eigen::VectorXd> in(values.data(), static_cast<Eigen::Index>(values.size()));
    std::vector<double> out(values.size());
    Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) = matrix_ * in;
    return out;
}

DerivativeMatrix derivative_matrix(const Grid& grid, int degree, int accuracy_order) {
    require(degree >= 1, "derivative degree must be at least 1");
    require(accuracy_order >= 2 && accuracy_order % 2 == 0,
            "accuracy order must be an even integer >= 2");
    const std::size_t n = grid.size();
    const auto d = static_cast<std::size_t>(degree);
    const auto p = static_cast<std::size_t>(accuracy_order);
    require(n > d + p, "stencil wider than grid: need more than degree + accuracy_order points");

    // Centred stencil: 2*floor((d+1)/2) - 1 + p points. One-sided: d + p points.
    const std::size_t centred_width = 2 * ((d + 1) / 2) - 1 + p;
    const std::size_t half = centred_width / 2;
    const std::size_t side_width = d + p;
    require(centred_width <= n, "stencil wider than grid");

    const double scale = std::pow(grid.spacing(), -static_cast<double>(degree));

    // Weights are computed on integer offsets and scaled by h^-d afterwards.
    auto offsets = [](std::size_t start, std::size_t width) {
        std::vector<double> o(width);
        for (std::size_t j = 0; j < width; ++j) {
            o[j] = static_cast<double>(start + j);
        }
        return o;
    };
    auto weights_for = [&](double z, const std::vector<double>& nodes) {
        const auto table = fd_weights(z, nodes, degree);
        return std::vector<double>(table.begin() + static_cast<std::ptrdiff_t>(d * nodes.size()),
                                   table.end());
    };

    const auto centred_nodes = offsets(0, centred_width);
    const auto centred = weights_for(static_cast<double>(half), centred_nodes);

    DerivativeMatrix out;
    out.degree_ = degree;
    out.accuracy_ = accuracy_order;
    out.half_width_ = half;
    out.row_start_.resize(n);

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(n * std::max(centred_width, side_width));
    const auto side_nodes = offsets(0, side_width);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t start = 0;
        std::vector<double> w;
        if (i >= half && i + half < n) {
            start = i - half;
            w = centred;
        } else if (i < half) {
            start = 0;
            w = weights_for(static_cast<double>(i), side_nodes);
        } else {
            start = n - side_width;
            w = weights_for(static_cast<double>(i - start), side_nodes);
        }
        out.row_start_[i] = start;
        for (std::size_t j = 0; j < w.size(); ++j) {
            triplets.emplace_back(static_cast<Eigen::Index>(i),
                                  static_cast<Eigen::Index>(start + j), w[j] * scale);
        }
    }
    out.matrix_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    out.matrix_.setFromTriplets(triplets.begin(), triplets.end());
    out.matrix_.makeCompressed();
    return out;
}

}  // namespace fprom
