#include "fprom/fpe_solver.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include <Eigen/SparseLU>

#include "fprom/error.hpp"

namespace fprom {

namespace {

using ColMatrix = Eigen::SparseMatrix<double>;

void replace_row(SparseRowMatrix& m, Eigen::Index row,
                 std::initializer_list<std::pair<Eigen::Index, double>> entries) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(m.nonZeros()) + entries.size());
    for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
        if (r == row) continue;
        for (SparseRowMatrix::InnerIterator it(m, r); it; ++it) {
            triplets.emplace_back(r, it.col(), it.value());
        }
    }
    for (const auto& [col, value] : entries) triplets.emplace_back(row, col, value);
    SparseRowMatrix out(m.rows(), m.cols());
    out.setFromTriplets(triplets.begin(), triplets.end());
    out.makeCompressed();
    m = std::move(out);
}

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

std::string time_string(double t) {
    std::ostringstream s;
    s.precision(17);
    s << t;
    return s.str();
}

}  // namespace

std::vector<double> step_rhs(const DensityField& f, const CoefficientModel& model, double t,
                             const DerivativeMatrix& e1, const DerivativeMatrix& e2) {
    require(e1.size() == f.size() && e2.size() == f.size(),
            "derivative matrices do not match the density grid");
    const auto c = model.eval(t);
    const auto n = static_cast<Eigen::Index>(f.size());
    Eigen::Map<const Eigen::VectorXd> values(f.values().data(), n);
    const Eigen::VectorXd drift_flux = c.drift * values;
    const Eigen::VectorXd diffusion_term = c.diffusion * values;
    const Eigen::VectorXd rhs = -(e1.matrix() * drift_flux) + e2.matrix() * diffusion_term;
    return std::vector<double>(rhs.data(), rhs.data() + rhs.size());
}

FpeOperator::FpeOperator(const Grid& grid, Boundary boundary, int accuracy_order)
    : grid_(grid), boundary_(boundary) {
    k1_ = -derivative_matrix(grid, 1, accuracy_order).matrix();
    k2_ = derivative_matrix(grid, 2, accuracy_order).matrix();

    const auto last = static_cast<Eigen::Index>(grid.size() - 1);
    const double h = grid.spacing();
    if (boundary == Boundary::zero_flux) {
        // Half cell [x0, x0 + h/2]: (h/2) df0/dt = -J(x0 + h/2), with the flux
        // J = D1 f - d(D2 f)/dx taken at the cell face and J(x0) = 0.
        replace_row(k1_, 0, {{0, -1.0 / h}, {1, -1.0 / h}});
        replace_row(k2_, 0, {{0, -2.0 / (h * h)}, {1, 2.0 / (h * h)}});
        replace_row(k1_, last, {{last - 1, 1.0 / h}, {last, 1.0 / h}});
        replace_row(k2_, last, {{last - 1, 2.0 / (h * h)}, {last, -2.0 / (h * h)}});
    } else {
        replace_row(k1_, 0, {});
        replace_row(k2_, 0, {});
        replace_row(k1_, last, {});
        replace_row(k2_, last, {});
    }
}

SparseRowMatrix FpeOperator::assemble(const CoefficientValues& c) const {
    SparseRowMatrix a = c.drift * k1_ + c.diffusion * k2_;
    a.makeCompressed();
    return a;
}

void FpeOperator::apply(const CoefficientValues& c, const Eigen::VectorXd& f, Eigen::VectorXd& out) const {
    out.noalias() = c.drift * (k1_ * f);
    out.noalias() += c.diffusion * (k2_ * f);
}

long steps_to(double t0, double t, double dt) {
    const double ratio = (t - t0) / dt;
    const double rounded = std::round(ratio);
    require(rounded >= 0.0, "record time " + time_string(t) + " precedes the initial time " + time_string(t0));
    require(std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, std::abs(ratio)),
            "record time " + time_string(t) + " is not an integer multiple of dt = " + time_string(dt) +
                " past the initial time " + time_string(t0));
    return static_cast<long>(rounded);
}

SolutionTrace solve(const DensityField& f0, const CoefficientModel& model, const SolverConfig& config) {
    require(std::isfinite(config.dt) && config.dt > 0.0, "solver dt must be positive");
    require(!config.record_times.empty(), "solver needs at least one record time");
    require(std::abs(f0.mass() - 1.0) <= 1e-3, "initial density is not normalized");

    const double t0 = f0.time();
    std::vector<long> record_steps;
    record_steps.reserve(config.record_times.size());
    for (std::size_t j = 0; j < config.record_times.size(); ++j) {
        const double tj = config.record_times[j];
        require(std::isfinite(tj), "record times must be finite");
        require(tj >= t0, "record time " + time_string(tj) + " precedes the initial time " + time_string(t0));
        if (j > 0) require(tj > config.record_times[j - 1], "record times must be strictly increasing");
        record_steps.push_back(steps_to(t0, tj, config.dt));
    }
    const double t_end = config.record_times.back();

    if (!config.allow_negative_diffusion) {
        const double lo = model.min_diffusion(t0, t_end);
        if (lo < 0.0) {
            throw_infeasible("diffusion coefficient reaches " + time_string(lo) + " on [" + time_string(t0) +
                             ", " + time_string(t_end) +
                             "]; negative diffusion is ill-posed (set allow_negative_diffusion to override)");
        }
    }

    const Grid& grid = f0.grid();
    const double h = grid.spacing();
    if (config.integrator == Integrator::explicit_rk4) {
        const double dmax = model.max_abs_diffusion(t0, t_end);
        if (dmax > 0.0) {
            const double bound = kRk4StabilityFactor * h * h / dmax;
            if (config.dt > bound) {
                throw_infeasible("explicit step dt = " + time_string(config.dt) +
                                 " exceeds the stability bound " + time_string(bound));
            }
        }
    }

    const FpeOperator op(grid, config.boundary, config.accuracy_order);
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(f0.values().data(), n);
    if (config.boundary == Boundary::zero_dirichlet) {
        f[0] = 0.0;
        f[n - 1] = 0.0;
    }

    SolutionTrace trace;
    trace.snapshots.reserve(record_steps.size());
    trace.mass_log.reserve(static_cast<std::size_t>(record_steps.back()));

    const double dt = config.dt;
    std::size_t next_record = 0;
    auto record = [&](std::size_t j) {
        std::vector<double> values(f.data(), f.data() + f.size());
        for (double& v : values) v = std::max(v, 0.0);
        const double m = trapezoid(grid, values);
        if (!(m > 0.0)) {
            trace.diverged = true;
            trace.diagnostic = "density lost all positive mass at t = " + time_string(config.record_times[j]);
            return false;
        }
        for (double& v : values) v /= m;
        trace.snapshots.emplace_back(grid, std::move(values), config.record_times[j]);
        return true;
    };

    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), stage(n), rhs(n);
    SparseRowMatrix identity(n, n);
    identity.setIdentity();
    Eigen::SparseLU<ColMatrix> lu;
    std::optional<CoefficientValues> factored;

    const long total = record_steps.back();
    for (long step = 0; step <= total; ++step) {
        while (next_record < record_steps.size() && record_steps[next_record] == step) {
            if (!record(next_record)) return trace;
            ++next_record;
        }
        if (step == total) break;

        const double t = t0 + static_cast<double>(step) * dt;
        const double t_next = t0 + static_cast<double>(step + 1) * dt;
        if (config.integrator == Integrator::explicit_rk4) {
            const auto c_start = model.eval(t);
            const auto c_mid = model.eval(t + 0.5 * dt);
            const auto c_end = model.eval(t_next);
            op.apply(c_start, f, k1);
            stage = f + 0.5 * dt * k1;
            op.apply(c_mid, stage, k2);
            stage = f + 0.5 * dt * k2;
            op.apply(c_mid, stage, k3);
            stage = f + dt * k3;
            op.apply(c_end, stage, k4);
            f += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } else {
            const auto c_now = model.eval(t);
            const auto c_next = model.eval(t_next);
            if (!factored || factored->drift != c_next.drift || factored->diffusion != c_next.diffusion) {
                const ColMatrix lhs = identity - (0.5 * dt) * op.assemble(c_next);
                lu.compute(lhs);
                if (lu.info() != Eigen::Success) {
                    trace.diverged = true;
                    trace.diagnostic = "Crank-Nicolson system is singular at t = " + time_string(t_next);
                    return trace;
                }
                factored = c_next;
            }
            op.apply(c_now, f, rhs);
            rhs = f + (0.5 * dt) * rhs;
            f = lu.solve(rhs);
        }

        if (!all_finite(f)) {
            trace.diverged = true;
            trace.diagnostic = "non-finite density after step to t = " + time_string(t_next);
            return trace;
        }
        trace.mass_log.push_back(trapezoid(grid, std::span<const double>(f.data(), static_cast<std::size_t>(f.size()))));
    }
    return trace;
}

}  // namespace fprom
