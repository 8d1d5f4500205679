#include "fprom/langevin_sim.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "fprom/error.hpp"
#include "fprom/parallel.hpp"

namespace fprom {

namespace {

std::mt19937_64 trajectory_engine(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

struct TrajectoryStats {
    double sum = 0.0;
    double sum_sq = 0.0;
};

}  // namespace

double SdeSpec::h(double x, double t) const {
    switch (drift) {
        case DriftKind::constant: return drift_params[0];
        case DriftKind::linear_in_t: return drift_params[0] + drift_params[1] * t;
        case DriftKind::linear_in_x: return drift_params[0] + drift_params[1] * x;
        case DriftKind::ornstein_uhlenbeck: return drift_params[0] * (drift_params[1] - x);
    }
    return 0.0;
}

double SdeSpec::g(double x, double /*t*/) const {
    switch (noise) {
        case NoiseKind::constant: return noise_params[0];
        case NoiseKind::linear_in_x: return noise_params[0] + noise_params[1] * x;
    }
    return 0.0;
}

TrajectoryEnsemble simulate(const SdeSpec& spec, const SimPlan& plan, NoiseStats* noise) {
    require(plan.n_trajectories >= 1, "simulation needs at least one trajectory");
    require(std::isfinite(plan.dt) && plan.dt > 0.0, "simulation dt must be positive");
    require(plan.stride >= 1, "sampling stride must be at least 1");
    require(std::isfinite(plan.horizon) && plan.horizon > 0.0, "simulation horizon must be positive");
    for (double p : spec.drift_params) require(std::isfinite(p), "drift parameters must be finite");
    for (double p : spec.noise_params) require(std::isfinite(p), "noise parameters must be finite");
    require(plan.x0.kind == InitialCondition::Kind::point || plan.x0.stddev >= 0.0,
            "initial standard deviation must be non-negative");

    const double ratio = plan.horizon / plan.dt;
    const auto steps = static_cast<std::size_t>(std::llround(ratio));
    require(steps >= 1 && std::abs(ratio - static_cast<double>(steps)) <= 1e-9 * ratio,
            "horizon must be an integer multiple of dt");
    require(steps % plan.stride == 0, "step count must be a multiple of the sampling stride");
    const std::size_t levels = steps / plan.stride + 1;

    std::vector<double> times(levels);
    for (std::size_t k = 0; k < levels; ++k) {
        times[k] = plan.t_start + static_cast<double>(k * plan.stride) * plan.dt;
    }

    std::vector<double> samples(plan.n_trajectories * levels);
    std::vector<TrajectoryStats> stats(plan.n_trajectories);
    const double sqrt_dt = std::sqrt(plan.dt);

    parallel_for(plan.n_trajectories, plan.threads, [&](std::size_t r) {
        auto engine = trajectory_engine(plan.seed, r);
        std::normal_distribution<double> normal(0.0, 1.0);
        double x = plan.x0.mean;
        if (plan.x0.kind == InitialCondition::Kind::normal) x += plan.x0.stddev * normal(engine);
        double* out = samples.data() + r * levels;
        out[0] = x;
        TrajectoryStats local;
        for (std::size_t step = 0; step < steps; ++step) {
            const double t = plan.t_start + static_cast<double>(step) * plan.dt;
            const double amp = spec.g(x, t);
            if (amp < 0.0) {
                std::ostringstream msg;
                msg << "noise amplitude g = " << amp << " is negative at x = " << x << ", t = " << t
                    << " (trajectory " << r << ")";
                throw_infeasible(msg.str());
            }
            const double xi = normal(engine);
            local.sum += xi;
            local.sum_sq += xi * xi;
            x += spec.h(x, t) * plan.dt + amp * sqrt_dt * xi;
            if (!std::isfinite(x)) {
                std::ostringstream msg;
                msg << "trajectory " << r << " became non-finite at t = " << t + plan.dt;
                throw_divergence(msg.str());
            }
            if ((step + 1) % plan.stride == 0) out[(step + 1) / plan.stride] = x;
        }
        stats[r] = local;
    });

    if (noise != nullptr) {
        double sum = 0.0;
        double sum_sq = 0.0;
        for (const auto& s : stats) {
            sum += s.sum;
            sum_sq += s.sum_sq;
        }
        noise->draws = plan.n_trajectories * steps;
        const auto n = static_cast<double>(noise->draws);
        noise->mean = sum / n;
        noise->variance = n > 1.0 ? (sum_sq - n * noise->mean * noise->mean) / (n - 1.0) : 0.0;
    }
    return TrajectoryEnsemble(std::move(times), plan.n_trajectories, std::move(samples));
}

std::vector<DensityField> ensemble_to_densities(const TrajectoryEnsemble& ens, const Grid& grid,
                                                const std::vector<double>& times,
                                                std::optional<double> bandwidth) {
    std::vector<DensityField> out;
    out.reserve(times.size());
    for (double t : times) {
        const auto k = ens.find_time(t);
        if (k < 0) throw_infeasible("time " + std::to_string(t) + " is not on the ensemble time axis");
        const double tk = ens.times()[static_cast<std::size_t>(k)];
        try {
            out.push_back(kde_estimate(ens.slice(static_cast<std::size_t>(k)), grid, bandwidth, tk));
        } catch (const Error& e) {
            throw Error(e.kind(), "density at t = " + std::to_string(tk) + ": " + e.what());
        }
    }
    return out;
}

DriftKind parse_drift_kind(const std::string& name) {
    if (name == "constant") return DriftKind::constant;
    if (name == "linear_in_t") return DriftKind::linear_in_t;
    if (name == "linear_in_x") return DriftKind::linear_in_x;
    if (name == "ornstein_uhlenbeck") return DriftKind::ornstein_uhlenbeck;
    throw_input("unknown drift kind '" + name + "'");
}

NoiseKind parse_noise_kind(const std::string& name) {
    if (name == "constant") return NoiseKind::constant;
    if (name == "linear_in_x") return NoiseKind::linear_in_x;
    throw_input("unknown noise kind '" + name + "'");
}

}  // namespace fprom
