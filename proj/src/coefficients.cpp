#include "fprom/coefficients.hpp"

#include <algorithm>
#include <cmath>

#include "fprom/error.hpp"

namespace fprom {

namespace {

void check_poly(const std::vector<double>& coeffs, const char* name) {
    require(coeffs.size() <= CoefficientModel::max_degree + 1,
            std::string(name) + " polynomial degree exceeds 3");
    for (double c : coeffs) require(std::isfinite(c), std::string(name) + " coefficient is not finite");
}

}  // namespace

CoefficientModel::CoefficientModel(std::vector<double> drift, std::vector<double> diffusion,
                                   bool x_dependent)
    : drift_(std::move(drift)), diffusion_(std::move(diffusion)) {
    require(!x_dependent, "space-dependent coefficients are not supported");
    if (drift_.empty()) drift_.push_back(0.0);
    if (diffusion_.empty()) diffusion_.push_back(0.0);
    check_poly(drift_, "drift");
    check_poly(diffusion_, "diffusion");
}

double horner(std::span<const double> coeffs, double t) {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * t + *it;
    return acc;
}

CoefficientValues CoefficientModel::eval(double t) const {
    return {horner(drift_, t), horner(diffusion_, t)};
}

double CoefficientModel::drift(double t) const { return horner(drift_, t); }
double CoefficientModel::diffusion(double t) const { return horner(diffusion_, t); }

std::vector<double> critical_points(std::span<const double> coeffs) {
    // derivative: c1 + 2 c2 t + 3 c3 t^2
    const double c1 = coeffs.size() > 1 ? coeffs[1] : 0.0;
    const double c2 = coeffs.size() > 2 ? 2.0 * coeffs[2] : 0.0;
    const double c3 = coeffs.size() > 3 ? 3.0 * coeffs[3] : 0.0;
    std::vector<double> roots;
    if (c3 == 0.0) {
        if (c2 != 0.0) roots.push_back(-c1 / c2);
        return roots;
    }
    const double disc = c2 * c2 - 4.0 * c3 * c1;
    if (disc < 0.0) return roots;
    const double sq = std::sqrt(disc);
    // Numerically stable quadratic roots.
    const double q = -0.5 * (c2 + std::copysign(sq, c2));
    if (q != 0.0) {
        roots.push_back(q / c3);
        roots.push_back(c1 / q);
    } else {
        roots.push_back(0.0);
    }
    return roots;
}

double CoefficientModel::min_diffusion(double t0, double t1) const {
    double lo = std::min(diffusion(t0), diffusion(t1));
    for (double r : critical_points(diffusion_)) {
        if (r > t0 && r < t1) lo = std::min(lo, diffusion(r));
    }
    return lo;
}

double CoefficientModel::max_abs_diffusion(double t0, double t1) const {
    double hi = std::max(std::abs(diffusion(t0)), std::abs(diffusion(t1)));
    for (double r : critical_points(diffusion_)) {
        if (r > t0 && r < t1) hi = std::max(hi, std::abs(diffusion(r)));
    }
    return hi;
}

}  // namespace fprom
