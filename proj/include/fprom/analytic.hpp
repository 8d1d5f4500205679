#pragma once

#include "fprom/density.hpp"

namespace fprom::analytic {

// Closed-form Gaussian solutions of the 1-D Fokker-Planck equation with
// constant coefficients.

/// No drift, diffusion D: mean 0, variance 2Dt.
double f1(double x, double t, double diffusion);

/// Drift mu, no diffusion, fixed width sigma: mean mu*t, variance sigma^2.
double f2(double x, double t, double drift, double sigma);

/// Drift mu and diffusion D: mean mu*t, variance 2Dt.
double f3(double x, double t, double drift, double diffusion);

/// Normal pdf with the given mean and variance.
double gaussian(double x, double mean, double variance);

DensityField f1_density(const Grid& grid, double t, double diffusion);
DensityField f2_density(const Grid& grid, double t, double drift, double sigma);
DensityField f3_density(const Grid& grid, double t, double drift, double diffusion);

}  // namespace fprom::analytic
