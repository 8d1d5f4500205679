#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fprom/grid.hpp"

namespace fprom {

/// Probability density sampled at the nodes of a Grid at one instant.
class DensityField {
public:
    /// Values must be finite and non-negative; they are stored as given.
    DensityField(Grid grid, std::vector<double> values, double time_stamp = 0.0);

    /// Clips negatives to zero and rescales to unit trapezoidal mass.
    /// Throws Error(infeasible) when nothing positive is left.
    static DensityField normalized(Grid grid, std::vector<double> values, double time_stamp = 0.0);

    /// Samples a callable at the grid nodes, then normalizes.
    static DensityField from_function(const Grid& grid, const std::function<double(double)>& pdf,
                                      double time_stamp = 0.0);

    const Grid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }
    double time() const noexcept { return time_; }

    double mass() const;
    DensityField with_time(double t) const { return DensityField(grid_, values_, t); }

private:
    Grid grid_;
    std::vector<double> values_;
    double time_;
};

/// Central moments: central[k] holds the k-th central moment, central[0] = 1, central[1] = 0.
struct MomentSet {
    double mean = 0.0;
    double variance = 0.0;
    std::vector<double> central;
};

inline constexpr double kKlFloor = 1e-12;
inline constexpr double kDefaultTikhonovLambda = 1e-6;

double trapezoid(const Grid& grid, std::span<const double> values);

/// Normal-reference bandwidth 1.06 * min(std, IQR/1.349) * m^(-1/5).
double normal_reference_bandwidth(std::span<const double> samples);

/// Receives non-fatal diagnostics (e.g. KDE support outside the grid).
/// Defaults to writing on stderr.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

/**
 * Gaussian-kernel density estimate evaluated on the grid nodes and
 * normalized to unit trapezoidal mass.
 *
 * bandwidth: std::nullopt selects the normal-reference rule.
 * Throws Error(infeasible) for fewer than 10 samples, non-finite samples,
 * or zero sample variance.
 */
DensityField kde_estimate(std::span<const double> samples, const Grid& grid,
                          std::optional<double> bandwidth = std::nullopt,
                          double time_stamp = 0.0);

/// Mean, variance and central moments up to max_order by trapezoidal quadrature.
/// Throws Error(infeasible) when the mass differs from 1 by more than 1e-3.
MomentSet moments(const DensityField& f, int max_order = 2);

/// Trapezoidal KL(p || q) with q floored by kKlFloor. Never negative.
double kl_divergence(const DensityField& p, const DensityField& q);

double l1_distance(const DensityField& p, const DensityField& q);
double l2_distance(const DensityField& p, const DensityField& q);

/// Unclipped minimizer of |f_hat - f|^2 + lambda |E f_hat|^2, i.e. (I + lambda E^T E) f_hat = f.
std::vector<double> tikhonov_solve(const Grid& grid, std::span<const double> values, double lambda,
                                   int deriv_degree = 2);

/// tikhonov_solve followed by clipping at zero and renormalization.
DensityField tikhonov_smooth(const DensityField& f, double lambda = kDefaultTikhonovLambda,
                             int deriv_degree = 2);

/// Linear interpolation of f onto another grid (zero outside its support), renormalized.
DensityField regrid(const DensityField& f, const Grid& target);

/// Piecewise-linear interpolant of the density at x (zero outside the grid).
double interpolate(const DensityField& f, double x);

}  // namespace fprom
