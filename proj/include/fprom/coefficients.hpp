#pragma once

#include <span>
#include <vector>

namespace fprom {

struct CoefficientValues {
    double drift = 0.0;
    double diffusion = 0.0;
};

/**
 * Time-only drift and diffusion coefficients,
 *   D1(t) = sum_k drift[k] t^k,  D2(t) = sum_k diffusion[k] t^k,
 * with polynomial degree at most 3 each. Interpreted in the Ito sense.
 *
 * Negative diffusion is representable so regression results can be kept
 * as-is; the forward solver refuses such models unless told otherwise.
 */
class CoefficientModel {
public:
    static constexpr std::size_t max_degree = 3;

    CoefficientModel() = default;

    /// Throws Error(infeasible) for more than four coefficients per polynomial,
    /// non-finite coefficients, or x_dependent = true (not supported).
    CoefficientModel(std::vector<double> drift, std::vector<double> diffusion,
                     bool x_dependent = false);

    static CoefficientModel constant(double drift, double diffusion) {
        return CoefficientModel({drift}, {diffusion});
    }

    const std::vector<double>& drift_poly() const noexcept { return drift_; }
    const std::vector<double>& diffusion_poly() const noexcept { return diffusion_; }

    CoefficientValues eval(double t) const;
    double drift(double t) const;
    double diffusion(double t) const;

    /// Exact minimum / maximum of |D2| over [t0, t1] via endpoint and critical-point checks.
    double min_diffusion(double t0, double t1) const;
    double max_abs_diffusion(double t0, double t1) const;

    friend bool operator==(const CoefficientModel&, const CoefficientModel&) = default;

private:
    std::vector<double> drift_{0.0};
    std::vector<double> diffusion_{0.0};
};

inline CoefficientValues eval(const CoefficientModel& model, double t) { return model.eval(t); }

/// Horner evaluation; an empty coefficient list is the zero polynomial.
double horner(std::span<const double> coeffs, double t);

/// Stationary points of a polynomial of degree <= 3 (real roots of its derivative).
std::vector<double> critical_points(std::span<const double> coeffs);

/// Ito drift equivalent to a Stratonovich drift h with noise gradient dg/dx:
/// h + g_gradient * diffusion.
inline double stratonovich_to_ito_drift(double h_drift, double g_gradient, double diffusion) {
    return h_drift + g_gradient * diffusion;
}

}  // namespace fprom
