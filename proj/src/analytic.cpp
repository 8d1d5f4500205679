#include "fprom/analytic.hpp"

#include <cmath>
#include <numbers>

#include "fprom/error.hpp"

namespace fprom::analytic {

double gaussian(double x, double mean, double variance) {
    const double d = x - mean;
    return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

double f1(double x, double t, double diffusion) { return gaussian(x, 0.0, 2.0 * diffusion * t); }

double f2(double x, double t, double drift, double sigma) {
    return gaussian(x, drift * t, sigma * sigma);
}

double f3(double x, double t, double drift, double diffusion) {
    return gaussian(x, drift * t, 2.0 * diffusion * t);
}

DensityField f1_density(const Grid& grid, double t, double diffusion) {
    require(t > 0.0 && diffusion > 0.0, "f1 needs t > 0 and D > 0");
    return DensityField::from_function(grid, [&](double x) { return f1(x, t, diffusion); }, t);
}

DensityField f2_density(const Grid& grid, double t, double drift, double sigma) {
    require(sigma > 0.0, "f2 needs sigma > 0");
    return DensityField::from_function(grid, [&](double x) { return f2(x, t, drift, sigma); }, t);
}

DensityField f3_density(const Grid& grid, double t, double drift, double diffusion) {
    require(t > 0.0 && diffusion > 0.0, "f3 needs t > 0 and D > 0");
    return DensityField::from_function(grid, [&](double x) { return f3(x, t, drift, diffusion); }, t);
}

}  // namespace fprom::analytic
