#include "fprom/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fprom/error.hpp"

namespace fprom {

std::vector<double> rejection_sample(const DensityField& f, std::size_t n, std::uint64_t seed,
                                     RejectionStats* stats) {
    require(n >= 1, "rejection sampling needs n >= 1");
    const auto values = f.values();
    const double peak = *std::max_element(values.begin(), values.end());
    require(peak > 0.0, "cannot sample from an all-zero density");

    const Grid& g = f.grid();
    const double ceiling = peak * (1.0 + 1e-9);
    std::mt19937_64 engine(seed);
    std::uniform_real_distribution<double> position(g.x_min(), g.x_max());
    std::uniform_real_distribution<double> height(0.0, ceiling);

    std::vector<double> out;
    out.reserve(n);
    std::size_t proposals = 0;
    while (out.size() < n) {
        const double x = position(engine);
        const double u = height(engine);
        ++proposals;
        if (u < interpolate(f, x)) out.push_back(x);
    }
    if (stats != nullptr) {
        stats->proposals = proposals;
        stats->accepted = n;
        stats->envelope = ceiling * (g.x_max() - g.x_min());
    }
    return out;
}

DensityField pushforward_density(const DensityField& f, const TransformSpec& transform, const Grid& target_grid,
                                 std::size_t n_samples, std::uint64_t seed) {
    if (!transform.is_identity()) {
        const double hi = f.grid().x_max();
        require(std::isfinite(std::exp(hi)), "inverse transform overflows on the density support");
    }
    auto samples = rejection_sample(f, n_samples, seed);
    for (double& s : samples) s = transform.inverse_x(s);
    return kde_estimate(samples, target_grid, std::nullopt, transform.inverse_t(f.time()));
}

}  // namespace fprom
