#pragma once

#include <string>
#include <vector>

#include "fprom/coefficients.hpp"
#include "fprom/density.hpp"
#include "fprom/grid.hpp"

namespace fprom {

enum class Integrator { explicit_rk4, crank_nicolson };
enum class Boundary { zero_flux, zero_dirichlet };

struct SolverConfig {
    Integrator integrator = Integrator::crank_nicolson;
    double dt = 1e-3;
    std::vector<double> record_times;
    Boundary boundary = Boundary::zero_flux;
    int accuracy_order = 2;
    bool allow_negative_diffusion = false;
};

struct SolutionTrace {
    std::vector<DensityField> snapshots;
    // Trapezoidal mass of the raw state after each step (before any clipping).
    std::vector<double> mass_log;
    bool diverged = false;
    std::string diagnostic;
};

/// Explicit stability factor on the diffusion bound dt <= factor * h^2 / max|D2|.
inline constexpr double kRk4StabilityFactor = 0.4;

/**
 * Right-hand side of the semi-discrete equation in matrix form,
 *   -E1 (D1(t) f) + E2 (D2(t) f),
 * with no boundary closure applied.
 */
std::vector<double> step_rhs(const DensityField& f, const CoefficientModel& model, double t,
                             const DerivativeMatrix& e1, const DerivativeMatrix& e2);

/**
 * Semi-discrete Fokker-Planck operator A(t) = D1(t) K1 + D2(t) K2 on a grid.
 *
 * K1 = -E1 and K2 = E2 in the interior. The two boundary rows are replaced
 * according to the boundary condition: zero_flux uses a half-cell balance
 * with no flux through the wall, zero_dirichlet pins the edge values at zero.
 */
class FpeOperator {
public:
    FpeOperator(const Grid& grid, Boundary boundary, int accuracy_order);

    const Grid& grid() const noexcept { return grid_; }
    Boundary boundary() const noexcept { return boundary_; }
    const SparseRowMatrix& drift_part() const noexcept { return k1_; }
    const SparseRowMatrix& diffusion_part() const noexcept { return k2_; }

    SparseRowMatrix assemble(const CoefficientValues& c) const;
    void apply(const CoefficientValues& c, const Eigen::VectorXd& f, Eigen::VectorXd& out) const;

private:
    Grid grid_;
    Boundary boundary_;
    SparseRowMatrix k1_;
    SparseRowMatrix k2_;
};

/**
 * Integrates f0 forward from f0.time() and records clipped, renormalized
 * snapshots at config.record_times.
 *
 * Record times must be integer multiples of dt past the start. Throws
 * Error(infeasible) for invalid configuration, negative diffusion over the
 * horizon (unless allowed) or an explicit step above the stability bound.
 * Non-finite states set the divergence flag and return the partial trace.
 */
SolutionTrace solve(const DensityField& f0, const CoefficientModel& model, const SolverConfig& config);

/// Number of dt steps from t0 to t, or Error(infeasible) if t is not on the step lattice.
long steps_to(double t0, double t, double dt);

}  // namespace fprom
