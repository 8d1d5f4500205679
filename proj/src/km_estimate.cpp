#include "fprom/km_estimate.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "fprom/error.hpp"

namespace fprom {

TrajectoryEnsemble::TrajectoryEnsemble(std::vector<double> times, std::size_t n_realizations,
                                       std::vector<double> samples, TransformSpec transform, AxisCheck check)
    : times_(std::move(times)), n_real_(n_realizations), samples_(std::move(samples)), transform_(transform) {
    require(times_.size() >= 2, "ensemble needs at least two time levels");
    require(n_real_ >= 1, "ensemble needs at least one realization");
    require(samples_.size() == n_real_ * times_.size(), "ensemble sample count does not match its shape");
    for (double t : times_) require(std::isfinite(t), "ensemble time axis has a non-finite entry");
    const double step = times_[1] - times_[0];
    require(step > 0.0, "ensemble time axis must be increasing");
    for (std::size_t k = 1; k < times_.size(); ++k) {
        const double dk = times_[k] - times_[k - 1];
        if (check == AxisCheck::increasing) {
            if (!(dk > 0.0)) throw_input("time axis is not increasing at level " + std::to_string(k));
        } else if (std::abs(dk - step) > 1e-9 * step) {
            throw_input("non-uniform time axis: step " + std::to_string(dk) + " at level " + std::to_string(k) +
                        " differs from " + std::to_string(step));
        }
    }
    for (double x : samples_) {
        if (!std::isfinite(x)) throw_input("ensemble contains a non-finite sample");
    }
}

std::vector<double> TrajectoryEnsemble::slice(std::size_t k) const {
    std::vector<double> out(n_real_);
    for (std::size_t r = 0; r < n_real_; ++r) out[r] = at(r, k);
    return out;
}

std::ptrdiff_t TrajectoryEnsemble::find_time(double t) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    for (std::size_t k = 0; k < times_.size(); ++k) {
        if (std::abs(times_[k] - t) <= tol) return static_cast<std::ptrdiff_t>(k);
    }
    return -1;
}

TrajectoryEnsemble TrajectoryEnsemble::window(std::size_t first, std::size_t last) const {
    require(first <= last && last < times_.size(), "ensemble window out of range");
    const std::size_t width = last - first + 1;
    require(width >= 2, "ensemble window must span at least two time levels");
    std::vector<double> times(times_.begin() + static_cast<std::ptrdiff_t>(first),
                              times_.begin() + static_cast<std::ptrdiff_t>(last + 1));
    std::vector<double> samples;
    samples.reserve(n_real_ * width);
    for (std::size_t r = 0; r < n_real_; ++r) {
        for (std::size_t k = first; k <= last; ++k) samples.push_back(at(r, k));
    }
    return TrajectoryEnsemble(std::move(times), n_real_, std::move(samples), transform_, AxisCheck::increasing);
}

TrajectoryEnsemble TrajectoryEnsemble::transformed(const TransformSpec& spec) const {
    require(transform_.is_identity(), "ensemble is already transformed");
    if (spec.is_identity()) return TrajectoryEnsemble(times_, n_real_, samples_);
    std::vector<double> times(times_.size());
    std::transform(times_.begin(), times_.end(), times.begin(), [&](double t) { return spec.forward_t(t); });
    std::vector<double> samples(samples_.size());
    std::transform(samples_.begin(), samples_.end(), samples.begin(),
                   [&](double x) { return spec.forward_x(x); });
    return TrajectoryEnsemble(std::move(times), n_real_, std::move(samples), spec);
}

TrajectoryEnsemble TrajectoryEnsemble::untransformed() const {
    if (transform_.is_identity()) return *this;
    std::vector<double> times(times_.size());
    std::transform(times_.begin(), times_.end(), times.begin(), [&](double s) { return transform_.inverse_t(s); });
    std::vector<double> samples(samples_.size());
    std::transform(samples_.begin(), samples_.end(), samples.begin(),
                   [&](double y) { return transform_.inverse_x(y); });
    return TrajectoryEnsemble(std::move(times), n_real_, std::move(samples), {}, AxisCheck::increasing);
}

std::vector<KmCell> conditional_km_coefficient(const TrajectoryEnsemble& ens, int order, std::size_t n_bins) {
    require(order >= 1 && order <= 4, "Kramers-Moyal order must be in 1..4");
    require(n_bins >= 4, "conditional estimate needs at least 4 bins");
    require(ens.n_realizations() >= kMinRealizations,
            "conditional estimate needs at least " + std::to_string(kMinRealizations) + " realizations");

    double factorial = 1.0;
    for (int i = 2; i <= order; ++i) factorial *= i;

    std::vector<KmCell> table;
    table.reserve((ens.n_times() - 1) * n_bins);
    std::vector<std::size_t> bin_of(ens.n_realizations());
    std::vector<double> increment(ens.n_realizations());
    for (std::size_t k = 0; k + 1 < ens.n_times(); ++k) {
        const double step = ens.times()[k + 1] - ens.times()[k];
        double lo = ens.at(0, k);
        double hi = lo;
        for (std::size_t r = 0; r < ens.n_realizations(); ++r) {
            lo = std::min(lo, ens.at(r, k));
            hi = std::max(hi, ens.at(r, k));
            increment[r] = ens.at(r, k + 1) - ens.at(r, k);
        }
        if (hi == lo) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double width = (hi - lo) / static_cast<double>(n_bins);

        std::vector<std::size_t> count(n_bins, 0);
        std::vector<double> sum(n_bins, 0.0);
        for (std::size_t r = 0; r < ens.n_realizations(); ++r) {
            auto b = static_cast<std::size_t>(std::floor((ens.at(r, k) - lo) / width));
            b = std::min(b, n_bins - 1);
            bin_of[r] = b;
            ++count[b];
            sum[b] += increment[r];
        }
        std::vector<double> centre(n_bins, 0.0);
        for (std::size_t b = 0; b < n_bins; ++b) {
            if (count[b] > 0) centre[b] = sum[b] / static_cast<double>(count[b]);
        }
        std::vector<double> moment(n_bins, 0.0);
        for (std::size_t r = 0; r < ens.n_realizations(); ++r) {
            const std::size_t b = bin_of[r];
            const double d = order == 1 ? increment[r] : increment[r] - centre[b];
            moment[b] += std::pow(d, order);
        }
        for (std::size_t b = 0; b < n_bins; ++b) {
            KmCell cell;
            cell.x_center = lo + (static_cast<double>(b) + 0.5) * width;
            cell.t = ens.times()[k];
            cell.count = count[b];
            cell.empty = count[b] < kMinCellSamples;
            if (!cell.empty) cell.estimate = moment[b] / static_cast<double>(count[b]) / (factorial * step);
            table.push_back(cell);
        }
    }
    return table;
}

double pooled_estimate(std::span<const KmCell> cells) {
    double acc = 0.0;
    std::size_t total = 0;
    for (const auto& c : cells) {
        if (c.empty) continue;
        acc += c.estimate * static_cast<double>(c.count);
        total += c.count;
    }
    require(total > 0, "no populated Kramers-Moyal cells");
    return acc / static_cast<double>(total);
}

MomentSeries moment_series(const TrajectoryEnsemble& ens) {
    require(ens.n_realizations() >= 2, "moment series needs at least two realizations");
    MomentSeries out;
    out.times = ens.times();
    out.mean.resize(ens.n_times());
    out.variance.resize(ens.n_times());
    const auto m = static_cast<double>(ens.n_realizations());
    for (std::size_t k = 0; k < ens.n_times(); ++k) {
        double mean = 0.0;
        for (std::size_t r = 0; r < ens.n_realizations(); ++r) mean += ens.at(r, k);
        mean /= m;
        double ss = 0.0;
        for (std::size_t r = 0; r < ens.n_realizations(); ++r) {
            const double d = ens.at(r, k) - mean;
            ss += d * d;
        }
        out.mean[k] = mean;
        out.variance[k] = ss / (m - 1.0);
    }
    return out;
}

std::vector<double> polyfit(std::span<const double> t, std::span<const double> y, int degree) {
    require(degree >= 0, "polynomial degree must be non-negative");
    require(t.size() == y.size(), "polyfit inputs differ in length");
    const auto cols = static_cast<Eigen::Index>(degree + 1);
    require(static_cast<Eigen::Index>(t.size()) >= cols, "too few points for the polynomial fit");

    Eigen::MatrixXd design(static_cast<Eigen::Index>(t.size()), cols);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(t.size()));
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
        double p = 1.0;
        for (Eigen::Index j = 0; j < cols; ++j) {
            design(i, j) = p;
            p *= t[static_cast<std::size_t>(i)];
        }
        rhs(i) = y[static_cast<std::size_t>(i)];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : INFINITY;
    if (!(cond <= 1e12)) {
        throw_infeasible("regression design matrix is ill-conditioned (condition number " +
                         std::to_string(cond) + ")");
    }
    const Eigen::VectorXd coeffs = svd.solve(rhs);
    return std::vector<double>(coeffs.data(), coeffs.data() + coeffs.size());
}

CoefficientModel regress_time_only_coefficients(const MomentSeries& series, double window_begin,
                                                double window_end, int drift_degree, int diffusion_degree) {
    require(drift_degree >= 0 && drift_degree <= 3 && diffusion_degree >= 0 && diffusion_degree <= 3,
            "coefficient polynomial degrees must be in 0..3");
    require(window_begin <= window_end, "regression window is reversed");
    const double tol = 1e-9 * std::max({1.0, std::abs(window_begin), std::abs(window_end)});
    std::vector<double> t, mean, var;
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        const double tk = series.times[k];
        if (tk >= window_begin - tol && tk <= window_end + tol) {
            t.push_back(tk);
            mean.push_back(series.mean[k]);
            var.push_back(series.variance[k]);
        }
    }
    const auto needed = static_cast<std::size_t>(std::max(drift_degree, diffusion_degree) + 2);
    require(t.size() >= needed, "regression window holds " + std::to_string(t.size()) +
                                    " time points; need at least " + std::to_string(needed));

    const auto mean_fit = polyfit(t, mean, drift_degree + 1);
    const auto var_fit = polyfit(t, var, diffusion_degree + 1);
    std::vector<double> drift(static_cast<std::size_t>(drift_degree) + 1);
    for (std::size_t k = 0; k < drift.size(); ++k) drift[k] = static_cast<double>(k + 1) * mean_fit[k + 1];
    std::vector<double> diffusion(static_cast<std::size_t>(diffusion_degree) + 1);
    for (std::size_t k = 0; k < diffusion.size(); ++k) {
        diffusion[k] = 0.5 * static_cast<double>(k + 1) * var_fit[k + 1];
    }
    return CoefficientModel(std::move(drift), std::move(diffusion));
}

}  // namespace fprom
