#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fprom/coefficients.hpp"
#include "fprom/transform.hpp"

namespace fprom {

enum class AxisCheck { uniform, increasing };

/**
 * Realizations x_r(t_k) of a scalar process on a shared time axis. Samples
 * are stored realization-major. The axis must be uniform in model units;
 * raw data headed for a log-time transform is only required to increase,
 * and transformed() checks uniformity afterwards.
 */
class TrajectoryEnsemble {
public:
    /// Validates: >= 2 time levels, axis per `check` (uniform: 1e-9 relative,
    /// Error(input) otherwise), finite samples, samples.size() == n_realizations * times.size().
    TrajectoryEnsemble(std::vector<double> times, std::size_t n_realizations, std::vector<double> samples,
                       TransformSpec transform = {}, AxisCheck check = AxisCheck::uniform);

    std::size_t n_realizations() const noexcept { return n_real_; }
    std::size_t n_times() const noexcept { return times_.size(); }
    const std::vector<double>& times() const noexcept { return times_; }
    double dt() const noexcept { return times_[1] - times_[0]; }
    const TransformSpec& transform() const noexcept { return transform_; }

    double at(std::size_t realization, std::size_t k) const { return samples_[realization * times_.size() + k]; }
    std::span<const double> trajectory(std::size_t realization) const {
        return {samples_.data() + realization * times_.size(), times_.size()};
    }
    const std::vector<double>& samples() const noexcept { return samples_; }

    /// Cross-section x_r(t_k) over all realizations.
    std::vector<double> slice(std::size_t k) const;

    /// Index of the time level matching t within 1e-9 * max(1, |t|), if any.
    std::ptrdiff_t find_time(double t) const;

    /// Sub-ensemble restricted to time levels [first, last] inclusive.
    TrajectoryEnsemble window(std::size_t first, std::size_t last) const;

    /// Applies a transform to raw (identity-tagged) data and checks the model-space
    /// axis is uniform; Error(input) on non-positive values or a non-uniform axis.
    TrajectoryEnsemble transformed(const TransformSpec& spec) const;

    /// Undoes the ensemble's transform and returns the identity-tagged data.
    TrajectoryEnsemble untransformed() const;

private:
    std::vector<double> times_;
    std::size_t n_real_;
    std::vector<double> samples_;
    TransformSpec transform_;
};

struct MomentSeries {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> variance;
};

struct KmCell {
    double x_center = 0.0;
    double t = 0.0;
    double estimate = 0.0;
    std::size_t count = 0;
    bool empty = true;
};

inline constexpr std::size_t kMinCellSamples = 20;
inline constexpr std::size_t kMinRealizations = 30;

/**
 * Binned finite-dt Kramers-Moyal estimate D^(n)(x, t_k) for every time level
 * but the last, using equal-width bins over the sample range at t_k.
 *
 * n = 1 averages the raw increments; n >= 2 uses increments centred on the
 * bin's mean increment. Cells holding fewer than kMinCellSamples samples are
 * returned with empty = true.
 */
std::vector<KmCell> conditional_km_coefficient(const TrajectoryEnsemble& ens, int order, std::size_t n_bins);

/// Count-weighted mean of the non-empty cells' estimates.
double pooled_estimate(std::span<const KmCell> cells);

/// Per-time mean and unbiased variance across realizations.
MomentSeries moment_series(const TrajectoryEnsemble& ens);

/**
 * Fits mean(t) with a polynomial of degree drift_degree + 1 and variance(t)
 * with degree diffusion_degree + 1 over the window, then returns
 * D1 = d mean/dt and D2 = (1/2) d var/dt.
 * Throws Error(infeasible) for short windows or a design matrix with
 * condition number above 1e12.
 */
CoefficientModel regress_time_only_coefficients(const MomentSeries& series, double window_begin,
                                                double window_end, int drift_degree, int diffusion_degree);

/// Least-squares polynomial fit; coefficients in increasing powers.
std::vector<double> polyfit(std::span<const double> t, std::span<const double> y, int degree);

}  // namespace fprom
