#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fprom/analytic.hpp"
#include "fprom/csv_io.hpp"
#include "fprom/error.hpp"
#include "fprom/km_estimate.hpp"
#include "fprom/langevin_sim.hpp"
#include "fprom/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fprom;

namespace {

enum ExitCode { ok = 0, internal = 1, input = 2, divergence = 3, infeasible = 4 };

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string output_dir;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
    auto* opt = cmd->add_option("-c,--config", c.config, "JSON run configuration");
    if (config_required) opt->required();
    cmd->add_option("-s,--seed", c.seed, "random seed (overrides the config)");
    cmd->add_option("-o,--output-dir", c.output_dir,
                    std::string("output directory (default: config output_dir, then $") + kOutputDirEnv +
                        ", then ./fprom_out)");
}

RunConfig load(const Common& c) {
    auto cfg = load_config(c.config);
    if (c.seed) {
        cfg.seed = *c.seed;
        if (cfg.simulation) cfg.simulation->plan.seed = *c.seed;
    }
    if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
    return cfg;
}

fs::path output_dir(const RunConfig& cfg) {
    const auto dir = resolve_output_dir(cfg.output_dir);
    fs::create_directories(dir);
    return dir;
}

void cmd_simulate(const Common& c) {
    const auto cfg = load(c);
    if (!cfg.simulation) throw_input("config: a 'simulation' section is required");
    NoiseStats noise;
    const auto ens = simulate(cfg.simulation->sde, cfg.simulation->plan, &noise);
    const auto path = cfg.input.empty() ? output_dir(cfg) / "ensemble.csv" : cfg.input;
    io::write_ensemble_csv(path, ens);
    std::cout << "wrote " << ens.n_realizations() << " trajectories x " << ens.n_times() << " times to "
              << path.string() << "\n"
              << "noise draws=" << noise.draws << " mean=" << noise.mean << " variance=" << noise.variance << "\n";
}

void cmd_estimate(const Common& c) {
    const auto cfg = load(c);
    if (cfg.mode != InputMode::ensemble) throw_input("estimate needs ensemble input");
    const auto ens = io::read_ensemble_csv(cfg.input).transformed(cfg.transform);
    const auto dir = output_dir(cfg);

    std::ostringstream km;
    km << "order,t,x_center,estimate,count,empty\n";
    for (int order = 1; order <= 2; ++order) {
        for (const auto& cell : conditional_km_coefficient(ens, order, cfg.km_bins)) {
            km << order << ',' << io::format_double(cell.t) << ',' << io::format_double(cell.x_center) << ','
               << io::format_double(cell.estimate) << ',' << cell.count << ',' << (cell.empty ? 1 : 0) << '\n';
        }
    }
    io::write_text(dir / "km_coefficients.csv", km.str());

    const auto series = moment_series(ens);
    std::ostringstream ms;
    ms << "t,mean,variance\n";
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        ms << io::format_double(series.times[k]) << ',' << io::format_double(series.mean[k]) << ','
           << io::format_double(series.variance[k]) << '\n';
    }
    io::write_text(dir / "moments.csv", ms.str());

    double begin = series.times.front();
    double end = series.times.back();
    if (cfg.truncate_start) begin = cfg.transform.forward_t(*cfg.truncate_start);
    if (cfg.train_end) end = cfg.transform.forward_t(*cfg.train_end);
    const auto model = regress_time_only_coefficients(series, begin, end, cfg.drift_degree, cfg.diffusion_degree);
    std::ostringstream rep;
    auto join = [](const std::vector<double>& v) {
        std::string s;
        for (double x : v) s += (s.empty() ? "" : ",") + io::format_double(x);
        return s;
    };
    rep << "window=" << io::format_double(begin) << ',' << io::format_double(end) << '\n';
    rep << "drift=" << join(model.drift_poly()) << '\n';
    rep << "diffusion=" << join(model.diffusion_poly()) << '\n';
    io::write_text(dir / "estimate_report.txt", rep.str());
    std::cout << rep.str();
}

void cmd_train(const Common& c, bool force_loss) {
    auto cfg = load(c);
    if (force_loss) cfg.method = CalibrationMethod::loss_minimization;
    run_train(cfg);
    const auto dir = resolve_output_dir(cfg.output_dir);
    std::cout << io::read_text(dir / "run_report.txt");
}

RomArtifact artifact_for(const RunConfig& cfg, const std::string& explicit_path) {
    const fs::path path = explicit_path.empty() ? resolve_output_dir(cfg.output_dir) / "artifact.json" : fs::path(explicit_path);
    return load_artifact(path);
}

void cmd_predict(const Common& c, const std::string& artifact_path, std::optional<double> horizon) {
    const auto cfg = load(c);
    const auto rom = artifact_for(cfg, artifact_path);
    const auto h = horizon ? horizon : cfg.horizon;
    if (!h) throw_input("predict needs a horizon (--horizon or predict.horizon)");
    const auto& tf = rom.transform;
    std::vector<double> record;
    for (double t : cfg.record_times) record.push_back(tf.forward_t(t));
    const auto dir = output_dir(cfg);
    const auto out = run_predict(rom, tf.forward_t(*h), record, dir, cfg.reconstruct_samples, cfg.seed);
    std::cout << "wrote " << out.densities.size() << " densities";
    if (!out.reconstructed.empty()) std::cout << " and " << out.reconstructed.size() << " reconstructed densities";
    std::cout << " to " << dir.string() << "\n";
}

void cmd_validate(const Common& c, const std::string& artifact_path) {
    const auto cfg = load(c);
    const auto rom = artifact_for(cfg, artifact_path);
    const auto report = run_validate(rom, testing_densities(cfg, rom), output_dir(cfg));
    std::cout << report.to_csv();
}

struct OracleArgs {
    std::string family = "f3";
    double t = 1.0;
    double mu = 1.0;
    double diffusion = 0.5;
    double sigma = 1.0;
    double x_min = -10.0;
    double x_max = 20.0;
    std::size_t n_points = 1025;
    std::string output;
};

void cmd_oracle(const OracleArgs& a) {
    const Grid g = Grid::uniform(a.x_min, a.x_max, a.n_points);
    DensityField f = a.family == "f1"   ? analytic::f1_density(g, a.t, a.diffusion)
                     : a.family == "f2" ? analytic::f2_density(g, a.t, a.mu, a.sigma)
                                        : analytic::f3_density(g, a.t, a.mu, a.diffusion);
    if (a.output.empty()) {
        std::cout << "x,f\n";
        for (std::size_t i = 0; i < f.size(); ++i) {
            std::cout << io::format_double(g.node(i)) << ',' << io::format_double(f[i]) << '\n';
        }
    } else {
        io::write_density_csv(a.output, f);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fokker-Planck reduced-order models: simulate, estimate, calibrate, predict, validate"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    Common common;
    auto* simulate_cmd = app.add_subcommand("simulate", "generate a Langevin ensemble (writes ensemble CSV)");
    add_common(simulate_cmd, common, true);

    auto* estimate_cmd = app.add_subcommand("estimate", "Kramers-Moyal tables, moment series and regressed coefficients");
    add_common(estimate_cmd, common, true);

    auto* train_cmd = app.add_subcommand("train", "calibrate with the configured method and write artifact.json");
    add_common(train_cmd, common, true);

    auto* calibrate_cmd = app.add_subcommand("calibrate", "train with loss_minimization");
    add_common(calibrate_cmd, common, true);

    std::string artifact_path;
    std::optional<double> horizon;
    auto* predict_cmd = app.add_subcommand("predict", "forward-solve a trained artifact");
    add_common(predict_cmd, common, true);
    predict_cmd->add_option("-a,--artifact", artifact_path, "artifact path (default <output-dir>/artifact.json)");
    predict_cmd->add_option("--horizon", horizon, "final time in original units");

    auto* validate_cmd = app.add_subcommand("validate", "compare predictions with the testing split");
    add_common(validate_cmd, common, true);
    validate_cmd->add_option("-a,--artifact", artifact_path, "artifact path (default <output-dir>/artifact.json)");

    OracleArgs oracle;
    auto* oracle_cmd = app.add_subcommand("oracle", "write an analytic Gaussian solution as a density CSV");
    oracle_cmd->add_option("--family", oracle.family, "f1 (diffusion), f2 (drift), f3 (both)")
        ->check(CLI::IsMember({"f1", "f2", "f3"}));
    oracle_cmd->add_option("-t,--time", oracle.t, "time")->check(CLI::PositiveNumber);
    oracle_cmd->add_option("--mu", oracle.mu, "drift");
    oracle_cmd->add_option("--diffusion", oracle.diffusion, "diffusion coefficient");
    oracle_cmd->add_option("--sigma", oracle.sigma, "standard deviation for f2");
    oracle_cmd->add_option("--x-min", oracle.x_min, "grid start");
    oracle_cmd->add_option("--x-max", oracle.x_max, "grid end");
    oracle_cmd->add_option("-n,--n-points", oracle.n_points, "grid nodes");
    oracle_cmd->add_option("-o,--output", oracle.output, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ExitCode::ok : ExitCode::input;
    }

    try {
        if (*simulate_cmd) cmd_simulate(common);
        else if (*estimate_cmd) cmd_estimate(common);
        else if (*train_cmd) cmd_train(common, false);
        else if (*calibrate_cmd) cmd_train(common, true);
        else if (*predict_cmd) cmd_predict(common, artifact_path, horizon);
        else if (*validate_cmd) cmd_validate(common, artifact_path);
        else if (*oracle_cmd) cmd_oracle(oracle);
    } catch (const Error& e) {
        std::cerr << "fprom: " << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::input: return ExitCode::input;
            case ErrorKind::divergence: return ExitCode::divergence;
            case ErrorKind::infeasible: return ExitCode::infeasible;
        }
    } catch (const std::exception& e) {
        std::cerr << "fprom: internal error: " << e.what() << "\n";
        return ExitCode::internal;
    }
    return ExitCode::ok;
}
