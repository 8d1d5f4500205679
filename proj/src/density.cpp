#include "fprom/density.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "fprom/error.hpp"

namespace fprom {

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

WarningSink& sink() {
    static WarningSink s = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
    return s;
}

void require_same_grid(const DensityField& p, const DensityField& q) {
    require(p.grid() == q.grid(), "densities are defined on different grids");
}

// Linear-interpolation quantile (type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double prob) {
    const double pos = prob * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double sample_std(std::span<const double> samples) {
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    return std::sqrt(ss / static_cast<double>(samples.size() - 1));
}

}  // namespace

DensityField::DensityField(Grid grid, std::vector<double> values, double time_stamp)
    : grid_(grid), values_(std::move(values)), time_(time_stamp) {
    require(values_.size() == grid_.size(), "density length does not match its grid");
    for (double v : values_) {
        require(std::isfinite(v) && v >= 0.0, "density values must be finite and non-negative");
    }
}

DensityField DensityField::normalized(Grid grid, std::vector<double> values, double time_stamp) {
    require(values.size() == grid.size(), "density length does not match its grid");
    for (double& v : values) {
        require(std::isfinite(v), "density values must be finite");
        v = std::max(v, 0.0);
    }
    const double m = trapezoid(grid, values);
    require(m > 0.0, "density has no positive mass");
    for (double& v : values) v /= m;
    return DensityField(grid, std::move(values), time_stamp);
}

DensityField DensityField::from_function(const Grid& grid, const std::function<double(double)>& pdf,
                                         double time_stamp) {
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = pdf(grid.node(i));
    return normalized(grid, std::move(values), time_stamp);
}

double DensityField::mass() const { return trapezoid(grid_, values_); }

double trapezoid(const Grid& grid, std::span<const double> values) {
    require(values.size() == grid.size(), "quadrature vector length does not match grid");
    double interior = 0.0;
    for (std::size_t i = 1; i + 1 < values.size(); ++i) interior += values[i];
    return grid.spacing() * (interior + 0.5 * (values.front() + values.back()));
}

void set_warning_sink(WarningSink s) {
    std::lock_guard lock(sink_mutex());
    sink() = std::move(s);
}

void warn(const std::string& message) {
    std::lock_guard lock(sink_mutex());
    if (sink()) sink()(message);
}

double normal_reference_bandwidth(std::span<const double> samples) {
    require(samples.size() >= 2, "bandwidth selection needs at least two samples");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double sd = sample_std(samples);
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.349);
    return 1.06 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

DensityField kde_estimate(std::span<const double> samples, const Grid& grid,
                          std::optional<double> bandwidth, double time_stamp) {
    require(samples.size() >= 10, "kernel density estimate needs at least 10 samples, got " +
                                      std::to_string(samples.size()));
    for (double s : samples) require(std::isfinite(s), "kernel density estimate got a non-finite sample");

    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    require(sorted.front() < sorted.back(),
            "all samples are identical (zero variance); use a delta-like initial density instead");

    const double bw = bandwidth ? *bandwidth : normal_reference_bandwidth(samples);
    require(std::isfinite(bw) && bw > 0.0, "kernel bandwidth must be positive");

    if (sorted.front() - 3.0 * bw < grid.x_min() || sorted.back() + 3.0 * bw > grid.x_max()) {
        std::ostringstream msg;
        msg << "KDE support [" << sorted.front() - 3.0 * bw << ", " << sorted.back() + 3.0 * bw
            << "] extends beyond grid [" << grid.x_min() << ", " << grid.x_max() << "]";
        warn(msg.str());
    }

    // Kernel contributions beyond 9 bandwidths are below 1e-17 of the peak.
    const double cutoff = 9.0 * bw;
    const double norm = 1.0 / (static_cast<double>(samples.size()) * bw * std::sqrt(2.0 * std::numbers::pi));
    std::vector<double> values(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.node(i);
        auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - cutoff);
        auto hi = std::upper_bound(lo, sorted.end(), x + cutoff);
        double acc = 0.0;
        for (auto it = lo; it != hi; ++it) {
            const double u = (x - *it) / bw;
            acc += std::exp(-0.5 * u * u);
        }
        values[i] = acc * norm;
    }
    return DensityField::normalized(grid, std::move(values), time_stamp);
}

MomentSet moments(const DensityField& f, int max_order) {
    require(max_order >= 2, "moments need max_order >= 2");
    const double m = f.mass();
    require(std::abs(m - 1.0) <= 1e-3, "density is not normalized (mass " + std::to_string(m) + ")");

    const Grid& g = f.grid();
    const auto w = g.trapezoid_weights();
    double mean = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) mean += w[i] * g.node(i) * f[i];
    mean /= m;

    MomentSet out;
    out.mean = mean;
    out.central.assign(static_cast<std::size_t>(max_order) + 1, 0.0);
    out.central[0] = 1.0;
    for (int k = 2; k <= max_order; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) acc += w[i] * std::pow(g.node(i) - mean, k) * f[i];
        out.central[static_cast<std::size_t>(k)] = acc / m;
    }
    out.variance = std::max(out.central[2], 0.0);
    out.central[2] = out.variance;
    return out;
}

double kl_divergence(const DensityField& p, const DensityField& q) {
    require_same_grid(p, q);
    const auto w = p.grid().trapezoid_weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= kKlFloor) continue;
        acc += w[i] * p[i] * std::log(p[i] / (q[i] + kKlFloor));
    }
    return std::max(acc, 0.0);
}

double l1_distance(const DensityField& p, const DensityField& q) {
    require_same_grid(p, q);
    std::vector<double> diff(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) diff[i] = std::abs(p[i] - q[i]);
    return trapezoid(p.grid(), diff);
}

double l2_distance(const DensityField& p, const DensityField& q) {
    require_same_grid(p, q);
    std::vector<double> diff(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) diff[i] = (p[i] - q[i]) * (p[i] - q[i]);
    return std::sqrt(trapezoid(p.grid(), diff));
}

std::vector<double> tikhonov_solve(const Grid& grid, std::span<const double> values, double lambda,
                                   int deriv_degree) {
    require(std::isfinite(lambda) && lambda > 0.0, "smoothing lambda must be positive");
    require(values.size() == grid.size(), "smoothing input length does not match grid");
    const auto e = derivative_matrix(grid, deriv_degree, 2);
    const Eigen::SparseMatrix<double> et = e.matrix().transpose();
    Eigen::SparseMatrix<double> system = lambda * (et * e.matrix());
    Eigen::SparseMatrix<double> identity(system.rows(), system.cols());
    identity.setIdentity();
    system += identity;

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(system);
    if (solver.info() != Eigen::Success) {
        throw_divergence("smoothing system is singular");
    }
    Eigen::Map<const Eigen::VectorXd> rhs(values.data(), static_cast<Eigen::Index>(values.size()));
    const Eigen::VectorXd x = solver.solve(rhs);
    if (solver.info() != Eigen::Success) {
        throw_divergence("smoothing solve failed");
    }
    return std::vector<double>(x.data(), x.data() + x.size());
}

DensityField tikhonov_smooth(const DensityField& f, double lambda, int deriv_degree) {
    auto smoothed = tikhonov_solve(f.grid(), f.values(), lambda, deriv_degree);
    return DensityField::normalized(f.grid(), std::move(smoothed), f.time());
}

double interpolate(const DensityField& f, double x) {
    const Grid& g = f.grid();
    if (x < g.x_min() || x > g.x_max()) return 0.0;
    const double pos = (x - g.x_min()) / g.spacing();
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i >= g.size() - 1) return f[g.size() - 1];
    const double frac = pos - static_cast<double>(i);
    return (1.0 - frac) * f[i] + frac * f[i + 1];
}

DensityField regrid(const DensityField& f, const Grid& target) {
    std::vector<double> values(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) values[i] = interpolate(f, target.node(i));
    return DensityField::normalized(target, std::move(values), f.time());
}

}  // namespace fprom
