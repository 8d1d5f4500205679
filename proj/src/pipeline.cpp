#include "fprom/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

#include "fprom/csv_io.hpp"
#include "fprom/error.hpp"
#include "fprom/km_estimate.hpp"
#include "fprom/sampling.hpp"

namespace fprom {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Reads config sections and remembers which keys fell back to defaults.
class ConfigReader {
public:
    ConfigReader(const json& doc, std::vector<std::string>& defaulted) : doc_(doc), defaulted_(defaulted) {}

    const json* section(const std::string& name, std::initializer_list<const char*> allowed) const {
        if (!doc_.contains(name)) return nullptr;
        const json& s = doc_.at(name);
        if (!s.is_object()) throw_input("config: '" + name + "' must be an object");
        check_keys(s, name, allowed);
        return &s;
    }

    template <typename T>
    T value(const json* sec, const std::string& prefix, const char* key, T fallback) const {
        const std::string name = prefix.empty() ? key : prefix + "." + key;
        if (sec == nullptr || !sec->contains(key)) {
            defaulted_.push_back(name);
            return fallback;
        }
        try {
            return sec->at(key).get<T>();
        } catch (const json::exception& e) {
            throw_input("config: bad value for '" + name + "': " + e.what());
        }
    }

    template <typename T>
    std::optional<T> optional(const json* sec, const std::string& prefix, const char* key) const {
        if (sec == nullptr || !sec->contains(key) || sec->at(key).is_null()) return std::nullopt;
        try {
            return sec->at(key).get<T>();
        } catch (const json::exception& e) {
            throw_input("config: bad value for '" + prefix + "." + key + "': " + e.what());
        }
    }

    static void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
        for (const auto& [k, v] : obj.items()) {
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
                throw_input("config: unknown key '" + k + "' in '" + where + "'");
            }
        }
    }

private:
    const json& doc_;
    std::vector<std::string>& defaulted_;
};

Integrator parse_integrator(const std::string& name) {
    if (name == "explicit_rk4") return Integrator::explicit_rk4;
    if (name == "crank_nicolson") return Integrator::crank_nicolson;
    throw_input("unknown integrator '" + name + "'");
}

Boundary parse_boundary(const std::string& name) {
    if (name == "zero_flux") return Boundary::zero_flux;
    if (name == "zero_dirichlet") return Boundary::zero_dirichlet;
    throw_input("unknown boundary '" + name + "'");
}

CalibrationMethod parse_method(const std::string& name) {
    if (name == "moment_regression") return CalibrationMethod::moment_regression;
    if (name == "loss_minimization") return CalibrationMethod::loss_minimization;
    throw_input("unknown calibration method '" + name + "'");
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

std::string fmt(double v) { return io::format_double(v); }

std::string join(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
    return out + "]";
}

std::vector<std::size_t> pick_targets(std::size_t available, std::size_t wanted) {
    // Levels 1..available-1 of the training window; always keeps the last one.
    std::vector<std::size_t> out;
    const std::size_t candidates = available - 1;
    if (wanted == 0 || wanted >= candidates) {
        for (std::size_t k = 1; k < available; ++k) out.push_back(k);
        return out;
    }
    std::set<std::size_t> chosen;
    for (std::size_t j = 1; j <= wanted; ++j) {
        chosen.insert((j * candidates + wanted - 1) / wanted);
    }
    return {chosen.begin(), chosen.end()};
}

json solver_to_json(const SolverConfig& s) {
    return json{{"integrator", to_string(s.integrator)},
                {"dt", s.dt},
                {"boundary", to_string(s.boundary)},
                {"accuracy_order", s.accuracy_order},
                {"allow_negative_diffusion", s.allow_negative_diffusion}};
}

}  // namespace

std::string to_string(CalibrationMethod m) {
    return m == CalibrationMethod::moment_regression ? "moment_regression" : "loss_minimization";
}

std::string to_string(Integrator i) { return i == Integrator::explicit_rk4 ? "explicit_rk4" : "crank_nicolson"; }

std::string to_string(Boundary b) { return b == Boundary::zero_flux ? "zero_flux" : "zero_dirichlet"; }

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) throw_input("config: top level must be a JSON object");
    ConfigReader::check_keys(doc, "config",
                             {"input", "transform", "grid", "kde", "split", "calibration", "solver", "smoothing",
                              "predict", "estimate", "simulation", "output_dir", "seed", "threads"});
    RunConfig cfg;
    ConfigReader r(doc, cfg.defaulted);

    if (const auto* in = r.section("input", {"mode", "path"})) {
        const auto mode = r.value<std::string>(in, "input", "mode", "ensemble");
        if (mode == "ensemble") cfg.mode = InputMode::ensemble;
        else if (mode == "densities") cfg.mode = InputMode::densities;
        else throw_input("config: input.mode must be 'ensemble' or 'densities'");
        if (auto p = r.optional<std::string>(in, "input", "path")) cfg.input = resolve(base_dir, *p);
    }

    cfg.transform.kind = parse_transform(r.value<std::string>(&doc, "", "transform", "identity"));

    if (const auto* g = r.section("grid", {"x_min", "x_max", "n_points"})) {
        GridSpec spec;
        auto lo = r.optional<double>(g, "grid", "x_min");
        auto hi = r.optional<double>(g, "grid", "x_max");
        auto n = r.optional<std::size_t>(g, "grid", "n_points");
        if (!lo || !hi || !n) throw_input("config: grid needs x_min, x_max and n_points");
        spec.x_min = *lo;
        spec.x_max = *hi;
        spec.n_points = *n;
        cfg.grid = spec;
    }

    const auto* kde = r.section("kde", {"bandwidth"});
    if (kde != nullptr && kde->contains("bandwidth") && kde->at("bandwidth").is_number()) {
        cfg.bandwidth = kde->at("bandwidth").get<double>();
    } else if (kde != nullptr && kde->contains("bandwidth") && kde->at("bandwidth") != "auto") {
        throw_input("config: kde.bandwidth must be a number or \"auto\"");
    } else if (kde == nullptr || !kde->contains("bandwidth")) {
        cfg.defaulted.push_back("kde.bandwidth");
    }

    if (const auto* s = r.section("split", {"train_end", "truncate_start"})) {
        cfg.train_end = r.optional<double>(s, "split", "train_end");
        cfg.truncate_start = r.optional<double>(s, "split", "truncate_start");
    }

    const auto* cal = r.section("calibration", {"method", "drift_degree", "diffusion_degree", "optimizer", "budget",
                                                "distance", "bounds", "target_count"});
    cfg.method = parse_method(r.value<std::string>(cal, "calibration", "method", "moment_regression"));
    cfg.drift_degree = r.value<int>(cal, "calibration", "drift_degree", 0);
    cfg.diffusion_degree = r.value<int>(cal, "calibration", "diffusion_degree", 0);
    cfg.optimizer = parse_optimizer(r.value<std::string>(cal, "calibration", "optimizer", "nelder_mead"));
    cfg.budget = r.value<std::size_t>(cal, "calibration", "budget", 300);
    cfg.distance = parse_distance(r.value<std::string>(cal, "calibration", "distance", "kl"));
    cfg.target_count = r.value<std::size_t>(cal, "calibration", "target_count", 4);
    if (auto b = r.optional<std::vector<std::vector<double>>>(cal, "calibration", "bounds")) {
        for (const auto& pair : *b) {
            if (pair.size() != 2) throw_input("config: each calibration bound must be [lower, upper]");
            cfg.bounds.push_back({pair[0], pair[1]});
        }
    }

    const auto* sol = r.section("solver", {"integrator", "dt", "boundary", "accuracy_order", "allow_negative_diffusion"});
    cfg.solver.integrator = parse_integrator(r.value<std::string>(sol, "solver", "integrator", "crank_nicolson"));
    cfg.solver.dt = r.value<double>(sol, "solver", "dt", 1e-3);
    cfg.solver.boundary = parse_boundary(r.value<std::string>(sol, "solver", "boundary", "zero_flux"));
    cfg.solver.accuracy_order = r.value<int>(sol, "solver", "accuracy_order", 2);
    cfg.solver.allow_negative_diffusion = r.value<bool>(sol, "solver", "allow_negative_diffusion", false);

    const auto* sm = r.section("smoothing", {"lambda", "deriv_degree"});
    cfg.smoothing_lambda = r.value<double>(sm, "smoothing", "lambda", kDefaultTikhonovLambda);
    cfg.smoothing_degree = r.value<int>(sm, "smoothing", "deriv_degree", 2);

    const auto* pr = r.section("predict", {"horizon", "record_times", "reconstruct_samples"});
    cfg.horizon = r.optional<double>(pr, "predict", "horizon");
    if (auto t = r.optional<std::vector<double>>(pr, "predict", "record_times")) cfg.record_times = *t;
    cfg.reconstruct_samples = r.value<std::size_t>(pr, "predict", "reconstruct_samples", 100000);

    const auto* est = r.section("estimate", {"n_bins"});
    cfg.km_bins = r.value<std::size_t>(est, "estimate", "n_bins", 10);

    if (const auto* sim = r.section("simulation", {"drift", "noise", "n_trajectories", "dt", "horizon", "stride",
                                                   "x0", "t_start"})) {
        SimulationSettings s;
        auto read_term = [&](const char* key, auto parse, auto& kind, std::array<double, 2>& params) {
            if (!sim->contains(key)) throw_input(std::string("config: simulation.") + key + " is required");
            const json& term = sim->at(key);
            ConfigReader::check_keys(term, std::string("simulation.") + key, {"kind", "params"});
            kind = parse(term.value("kind", std::string("constant")));
            const auto p = term.value("params", std::vector<double>{});
            if (p.empty() || p.size() > 2) throw_input(std::string("config: simulation.") + key + ".params needs 1 or 2 values");
            params = {p[0], p.size() > 1 ? p[1] : 0.0};
        };
        read_term("drift", parse_drift_kind, s.sde.drift, s.sde.drift_params);
        read_term("noise", parse_noise_kind, s.sde.noise, s.sde.noise_params);
        s.plan.n_trajectories = r.value<std::size_t>(sim, "simulation", "n_trajectories", 1000);
        s.plan.dt = r.value<double>(sim, "simulation", "dt", 1e-3);
        s.plan.horizon = r.value<double>(sim, "simulation", "horizon", 1.0);
        s.plan.stride = r.value<std::size_t>(sim, "simulation", "stride", 1);
        s.plan.t_start = r.value<double>(sim, "simulation", "t_start", 0.0);
        if (sim->contains("x0")) {
            const json& x0 = sim->at("x0");
            ConfigReader::check_keys(x0, "simulation.x0", {"kind", "mean", "stddev"});
            const auto kind = x0.value("kind", std::string("point"));
            if (kind == "point") s.plan.x0.kind = InitialCondition::Kind::point;
            else if (kind == "normal") s.plan.x0.kind = InitialCondition::Kind::normal;
            else throw_input("config: simulation.x0.kind must be 'point' or 'normal'");
            s.plan.x0.mean = x0.value("mean", 0.0);
            s.plan.x0.stddev = x0.value("stddev", 0.0);
        } else {
            cfg.defaulted.push_back("simulation.x0");
        }
        cfg.simulation = s;
    }

    if (doc.contains("output_dir")) cfg.output_dir = resolve(base_dir, doc.at("output_dir").get<std::string>());
    cfg.seed = r.value<std::uint64_t>(&doc, "", "seed", 0);
    cfg.threads = r.value<unsigned>(&doc, "", "threads", 0);
    if (cfg.simulation) {
        cfg.simulation->plan.seed = cfg.seed;
        cfg.simulation->plan.threads = cfg.threads;
    }
    return cfg;
}

RunConfig load_config(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(io::read_text(path));
    } catch (const json::parse_error& e) {
        throw_input("config " + path.string() + ": " + e.what());
    }
    return parse_config(doc, path.parent_path());
}

fs::path resolve_output_dir(const fs::path& configured) {
    if (!configured.empty()) return configured;
    if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return fs::path(env);
    return fs::path("fprom_out");
}

// ---------------------------------------------------------------------------
// Datasets

Dataset Dataset::subset(std::size_t first, std::size_t last) const {
    require(first <= last && last < times.size(), "dataset subset out of range");
    Dataset out;
    out.transform = transform;
    const auto b = static_cast<std::ptrdiff_t>(first);
    const auto e = static_cast<std::ptrdiff_t>(last + 1);
    out.times.assign(times.begin() + b, times.begin() + e);
    if (is_ensemble()) out.slices.assign(slices.begin() + b, slices.begin() + e);
    else out.densities.assign(densities.begin() + b, densities.begin() + e);
    return out;
}

DensityField Dataset::density_at(std::size_t k, const Grid& grid, std::optional<double> bandwidth) const {
    if (is_ensemble()) return kde_estimate(slices.at(k), grid, bandwidth, times.at(k));
    const auto& d = densities.at(k);
    if (d.grid() == grid) return d.with_time(times.at(k));
    warn("density at t = " + fmt(times.at(k)) + " regridded onto the model grid by linear interpolation");
    return regrid(d, grid).with_time(times.at(k));
}

MomentSeries Dataset::moment_series() const {
    MomentSeries out;
    out.times = times;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (is_ensemble()) {
            const auto& s = slices[k];
            require(s.size() >= 2, "moment series needs at least two realizations");
            double mean = 0.0;
            for (double v : s) mean += v;
            mean /= static_cast<double>(s.size());
            double ss = 0.0;
            for (double v : s) ss += (v - mean) * (v - mean);
            out.mean.push_back(mean);
            out.variance.push_back(ss / static_cast<double>(s.size() - 1));
        } else {
            const auto m = moments(densities[k]);
            out.mean.push_back(m.mean);
            out.variance.push_back(m.variance);
        }
    }
    return out;
}

Dataset dataset_from_ensemble(const TrajectoryEnsemble& ens) {
    Dataset d;
    d.transform = ens.transform();
    d.times = ens.times();
    for (std::size_t k = 0; k < ens.n_times(); ++k) d.slices.push_back(ens.slice(k));
    return d;
}

Dataset ingest(const RunConfig& config) {
    if (config.input.empty()) throw_input("config: input.path is required");
    if (!fs::exists(config.input)) throw_input("input file not found: " + config.input.string());

    if (config.mode == InputMode::ensemble) {
        const auto raw = io::read_ensemble_csv(config.input);
        return dataset_from_ensemble(raw.transformed(config.transform));
    }

    const auto entries = io::read_manifest(config.input);
    Dataset d;
    d.transform = config.transform;
    std::uint64_t stream = config.seed;
    for (const auto& e : entries) {
        auto density = io::read_density_csv(e.path, e.time);
        const double t = config.transform.forward_t(e.time);
        if (config.transform.is_identity()) {
            d.densities.push_back(density.with_time(t));
        } else {
            if (!config.grid) throw_input("config: a grid is required to transform density input");
            auto samples = rejection_sample(density, config.reconstruct_samples, stream++);
            for (double& s : samples) s = config.transform.forward_x(s);
            d.densities.push_back(kde_estimate(samples, config.grid->build(), config.bandwidth, t));
        }
        d.times.push_back(t);
    }
    return d;
}

TimeSplit split(const std::vector<double>& times, double train_end, std::optional<double> truncate_start) {
    require(!times.empty(), "cannot split an empty time axis");
    const double tol = 1e-9 * std::max(1.0, std::abs(train_end));
    const double start = truncate_start.value_or(times.front());
    require(!truncate_start || *truncate_start <= train_end, "truncate_start must not exceed train_end");

    TimeSplit s;
    bool have_train = false;
    bool have_test = false;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        if (t >= start - tol && t <= train_end + tol) {
            if (!have_train) s.train_first = k;
            s.train_last = k;
            have_train = true;
        } else if (t > train_end + tol) {
            if (!have_test) s.test_first = k;
            s.test_last = k;
            have_test = true;
        }
    }
    require(have_train, "split leaves the training set empty");
    require(have_test, "split leaves the testing set empty (train_end must precede the last time)");
    return s;
}

DatasetSplit split(const Dataset& data, double train_end, std::optional<double> truncate_start) {
    const auto s = split(data.times, train_end, truncate_start);
    return {data.subset(s.train_first, s.train_last), data.subset(s.test_first, s.test_last)};
}

// ---------------------------------------------------------------------------
// Artifact

json RomArtifact::to_json() const {
    json cal{{"method", calibration.method},
             {"seed", calibration.seed},
             {"tool_version", calibration.tool_version},
             {"optimizer", calibration.optimizer},
             {"evaluations", calibration.evaluations}};
    cal["loss"] = calibration.loss ? json(*calibration.loss) : json(nullptr);
    return json{{"format", "fprom-rom"},
                {"format_version", 1},
                {"grid", {{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"n_points", grid.n_points}}},
                {"model", {{"drift", model.drift_poly()}, {"diffusion", model.diffusion_poly()}}},
                {"transform", to_string(transform.kind)},
                {"initial_density",
                 {{"time", initial.time()},
                  {"values", std::vector<double>(initial.values().begin(), initial.values().end())}}},
                {"training_window", {train_first, train_last}},
                {"solver", solver_to_json(solver)},
                {"calibration", cal}};
}

RomArtifact RomArtifact::from_json(const json& doc) {
    try {
        if (doc.at("format") != "fprom-rom") throw_input("artifact: unknown format");
        if (doc.at("format_version") != 1) throw_input("artifact: unsupported format version");
        GridSpec g{doc.at("grid").at("x_min").get<double>(), doc.at("grid").at("x_max").get<double>(),
                   doc.at("grid").at("n_points").get<std::size_t>()};
        const auto& init = doc.at("initial_density");
        DensityField initial(g.build(), init.at("values").get<std::vector<double>>(), init.at("time").get<double>());
        const auto& sol = doc.at("solver");
        SolverConfig solver;
        solver.integrator = parse_integrator(sol.at("integrator").get<std::string>());
        solver.dt = sol.at("dt").get<double>();
        solver.boundary = parse_boundary(sol.at("boundary").get<std::string>());
        solver.accuracy_order = sol.at("accuracy_order").get<int>();
        solver.allow_negative_diffusion = sol.at("allow_negative_diffusion").get<bool>();
        const auto window = doc.at("training_window").get<std::vector<double>>();
        if (window.size() != 2 || !(window[0] <= window[1])) throw_input("artifact: bad training window");
        const auto& cal = doc.at("calibration");
        CalibrationMetadata meta;
        meta.method = cal.at("method").get<std::string>();
        if (!cal.at("loss").is_null()) meta.loss = cal.at("loss").get<double>();
        meta.seed = cal.at("seed").get<std::uint64_t>();
        meta.tool_version = cal.at("tool_version").get<std::string>();
        meta.optimizer = cal.at("optimizer").get<std::string>();
        meta.evaluations = cal.at("evaluations").get<std::size_t>();
        return RomArtifact{g,
                           CoefficientModel(doc.at("model").at("drift").get<std::vector<double>>(),
                                            doc.at("model").at("diffusion").get<std::vector<double>>()),
                           TransformSpec{parse_transform(doc.at("transform").get<std::string>())},
                           std::move(initial),
                           window[0],
                           window[1],
                           solver,
                           meta};
    } catch (const json::exception& e) {
        throw_input(std::string("artifact: ") + e.what());
    }
}

std::string RomArtifact::serialize() const { return to_json().dump(2) + "\n"; }

void save_artifact(const fs::path& path, const RomArtifact& artifact) { io::write_text(path, artifact.serialize()); }

RomArtifact load_artifact(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(io::read_text(path));
    } catch (const json::parse_error& e) {
        throw_input("artifact " + path.string() + ": " + e.what());
    }
    return RomArtifact::from_json(doc);
}

// ---------------------------------------------------------------------------
// Train / predict / validate

TrainOutcome train(const RunConfig& config, const Dataset& data) {
    if (!config.train_end) throw_input("config: split.train_end is required");
    const auto& tf = config.transform;
    std::optional<double> truncate;
    if (config.truncate_start) truncate = tf.forward_t(*config.truncate_start);
    const auto parts = split(data, tf.forward_t(*config.train_end), truncate);
    const Dataset& training = parts.training;

    if (!config.grid && data.is_ensemble()) throw_input("config: grid is required for ensemble input");
    const Grid grid = config.grid ? config.grid->build() : data.densities.front().grid();
    const GridSpec grid_spec{grid.x_min(), grid.x_max(), grid.size()};

    const auto raw_initial = training.density_at(0, grid, config.bandwidth);
    const auto initial = tikhonov_smooth(raw_initial, config.smoothing_lambda, config.smoothing_degree);
    const double tau0 = training.times.front();
    const double tau_last = training.times.back();

    std::vector<CalibrationTarget> targets;
    if (training.size() >= 2) {
        for (std::size_t k : pick_targets(training.size(), config.target_count)) {
            targets.push_back({training.times[k], training.density_at(k, grid, config.bandwidth)});
        }
    }

    CalibrationProblem problem{initial, targets, {}, config.drift_degree, config.diffusion_degree, config.bounds,
                               config.solver, config.distance};

    TrainOutcome out{RomArtifact{grid_spec, CoefficientModel{}, tf, initial, tau0, tau_last, config.solver, {}},
                     {},
                     std::nullopt};
    out.artifact.solver.record_times.clear();
    auto& meta = out.artifact.calibration;
    meta.method = to_string(config.method);
    meta.seed = config.seed;

    if (config.method == CalibrationMethod::moment_regression) {
        const auto series = training.moment_series();
        out.artifact.model = regress_time_only_coefficients(series, tau0, tau_last, config.drift_degree,
                                                            config.diffusion_degree);
        meta.optimizer = "none";
        if (!targets.empty()) {
            for (const auto& t : targets) steps_to(tau0, t.time, config.solver.dt);
            const double l = model_loss(problem, out.artifact.model);
            if (l < kLossPenalty) meta.loss = l;
        }
    } else {
        require(!targets.empty(), "loss minimization needs at least two training levels");
        if (problem.bounds.empty()) {
            throw_infeasible("config: calibration.bounds are required for loss_minimization (" +
                             std::to_string(problem.n_params()) + " [lower, upper] pairs)");
        }
        auto result = calibrate(problem, config.optimizer, config.budget, config.seed, config.threads);
        out.artifact.model = result.model;
        meta.optimizer = to_string(config.optimizer);
        meta.evaluations = result.evaluations;
        if (result.final_loss < kLossPenalty) meta.loss = result.final_loss;
        out.calibration = std::move(result);
    }

    std::ostringstream rep;
    rep << "tool_version=" << kToolVersion << '\n';
    rep << "input=" << config.input.generic_string() << '\n';
    rep << "input.mode=" << (config.mode == InputMode::ensemble ? "ensemble" : "densities") << '\n';
    rep << "transform=" << to_string(tf.kind) << '\n';
    rep << "grid.x_min=" << fmt(grid_spec.x_min) << '\n';
    rep << "grid.x_max=" << fmt(grid_spec.x_max) << '\n';
    rep << "grid.n_points=" << grid_spec.n_points << '\n';
    rep << "kde.bandwidth=" << (config.bandwidth ? fmt(*config.bandwidth) : std::string("auto")) << '\n';
    rep << "kde.initial_bandwidth_rule=" << (config.bandwidth ? "fixed" : "normal_reference_1.06") << '\n';
    rep << "split.train_end=" << fmt(*config.train_end) << '\n';
    rep << "split.truncate_start=" << (config.truncate_start ? fmt(*config.truncate_start) : std::string("none")) << '\n';
    rep << "training.levels=" << training.size() << '\n';
    rep << "testing.levels=" << parts.testing.size() << '\n';
    rep << "training.window=" << fmt(tau0) << "," << fmt(tau_last) << '\n';
    rep << "smoothing.lambda=" << fmt(config.smoothing_lambda) << '\n';
    rep << "smoothing.deriv_degree=" << config.smoothing_degree << '\n';
    rep << "calibration.method=" << meta.method << '\n';
    rep << "calibration.drift_degree=" << config.drift_degree << '\n';
    rep << "calibration.diffusion_degree=" << config.diffusion_degree << '\n';
    rep << "calibration.optimizer=" << meta.optimizer << '\n';
    rep << "calibration.budget=" << config.budget << '\n';
    rep << "calibration.distance=" << to_string(config.distance) << '\n';
    rep << "calibration.target_count=" << config.target_count << '\n';
    std::vector<double> target_times;
    for (const auto& t : targets) target_times.push_back(t.time);
    rep << "calibration.target_times=" << join(target_times) << '\n';
    rep << "solver.integrator=" << to_string(config.solver.integrator) << '\n';
    rep << "solver.dt=" << fmt(config.solver.dt) << '\n';
    rep << "solver.boundary=" << to_string(config.solver.boundary) << '\n';
    rep << "solver.accuracy_order=" << config.solver.accuracy_order << '\n';
    rep << "solver.allow_negative_diffusion=" << (config.solver.allow_negative_diffusion ? "true" : "false") << '\n';
    rep << "seed=" << config.seed << '\n';
    rep << "model.drift=" << join(out.artifact.model.drift_poly()) << '\n';
    rep << "model.diffusion=" << join(out.artifact.model.diffusion_poly()) << '\n';
    rep << "loss=" << (meta.loss ? fmt(*meta.loss) : std::string("n/a")) << '\n';
    rep << "evaluations=" << meta.evaluations << '\n';
    if (out.calibration) {
        rep << "status=" << (out.calibration->status == CalibrationStatus::converged ? "converged" : "budget_exhausted")
            << '\n';
    }
    const double lo = out.artifact.model.min_diffusion(tau0, tau_last);
    if (lo < 0.0) {
        rep << "warning=diffusion coefficient is negative (" << fmt(lo)
            << ") over the training window; forward solves require allow_negative_diffusion\n";
    }
    std::string defaulted;
    for (const auto& d : config.defaulted) defaulted += (defaulted.empty() ? "" : ",") + d;
    rep << "defaulted=" << defaulted << '\n';
    out.report = rep.str();
    return out;
}

RomArtifact run_train(const RunConfig& config) {
    const auto data = ingest(config);
    auto outcome = train(config, data);
    const auto dir = resolve_output_dir(config.output_dir);
    save_artifact(dir / "artifact.json", outcome.artifact);
    io::write_text(dir / "run_report.txt", outcome.report);
    return outcome.artifact;
}

Prediction predict(const RomArtifact& artifact, double horizon, std::vector<double> record_times,
                   std::size_t reconstruct_samples, std::uint64_t seed) {
    const double t0 = artifact.initial.time();
    require(std::isfinite(horizon) && horizon > artifact.train_last,
            "prediction horizon " + fmt(horizon) + " must exceed the training window end " + fmt(artifact.train_last));
    for (double t : record_times) {
        require(t >= t0, "record time " + fmt(t) + " precedes the initial time " + fmt(t0));
        require(t <= horizon, "record time " + fmt(t) + " lies beyond the horizon " + fmt(horizon));
    }
    std::sort(record_times.begin(), record_times.end());
    record_times.erase(std::unique(record_times.begin(), record_times.end()), record_times.end());
    if (record_times.empty() || record_times.back() < horizon) record_times.push_back(horizon);

    SolverConfig config = artifact.solver;
    config.record_times = record_times;
    const auto trace = solve(artifact.initial, artifact.model, config);
    if (trace.diverged) throw_divergence("forward solve diverged: " + trace.diagnostic);

    Prediction out;
    out.densities = trace.snapshots;
    if (!artifact.transform.is_identity()) {
        const auto& tf = artifact.transform;
        const Grid target = Grid::uniform(tf.inverse_x(artifact.grid.x_min), tf.inverse_x(artifact.grid.x_max),
                                          artifact.grid.n_points);
        for (std::size_t j = 0; j < out.densities.size(); ++j) {
            out.reconstructed.push_back(
                pushforward_density(out.densities[j], tf, target, reconstruct_samples, seed + j));
        }
    }
    return out;
}

Prediction run_predict(const RomArtifact& artifact, double horizon, const std::vector<double>& record_times,
                       const fs::path& out_dir, std::size_t reconstruct_samples, std::uint64_t seed) {
    auto result = predict(artifact, horizon, record_times, reconstruct_samples, seed);
    const auto& tf = artifact.transform;
    std::vector<io::ManifestEntry> manifest;
    for (std::size_t j = 0; j < result.densities.size(); ++j) {
        char name[32];
        std::snprintf(name, sizeof(name), "density_%03zu.csv", j);
        io::write_density_csv(out_dir / name, result.densities[j]);
        manifest.push_back({tf.inverse_t(result.densities[j].time()), name});
    }
    io::write_manifest(out_dir / "manifest.csv", manifest);
    if (!result.reconstructed.empty()) {
        std::vector<io::ManifestEntry> rec;
        for (std::size_t j = 0; j < result.reconstructed.size(); ++j) {
            char name[40];
            std::snprintf(name, sizeof(name), "reconstructed_%03zu.csv", j);
            io::write_density_csv(out_dir / name, result.reconstructed[j]);
            rec.push_back({result.reconstructed[j].time(), name});
        }
        io::write_manifest(out_dir / "reconstructed_manifest.csv", rec);
    }
    return result;
}

std::string MetricsReport::to_csv() const {
    std::ostringstream out;
    out << "time,kl,l1\n";
    for (const auto& r : rows) out << fmt(r.time) << ',' << fmt(r.kl) << ',' << fmt(r.l1) << '\n';
    if (!rows.empty()) {
        const auto f = final_row();
        out << "# final time=" << fmt(f.time) << " kl=" << fmt(f.kl) << " l1=" << fmt(f.l1) << '\n';
    }
    return out.str();
}

MetricsReport validate(const RomArtifact& artifact, const std::vector<DensityField>& testing) {
    require(!testing.empty(), "validation needs at least one testing density");
    const Grid grid = artifact.grid.build();
    std::vector<DensityField> observed;
    SolverConfig config = artifact.solver;
    for (const auto& d : testing) {
        if (d.grid() == grid) {
            observed.push_back(d);
        } else {
            warn("testing density at t = " + fmt(d.time()) + " regridded onto the artifact grid by linear interpolation");
            observed.push_back(regrid(d, grid));
        }
        config.record_times.push_back(d.time());
    }
    const auto trace = solve(artifact.initial, artifact.model, config);
    if (trace.diverged) throw_divergence("forward solve diverged: " + trace.diagnostic);

    MetricsReport report;
    for (std::size_t j = 0; j < observed.size(); ++j) {
        report.rows.push_back({artifact.transform.inverse_t(observed[j].time()),
                               kl_divergence(observed[j], trace.snapshots[j]),
                               l1_distance(observed[j], trace.snapshots[j])});
    }
    return report;
}

MetricsReport run_validate(const RomArtifact& artifact, const std::vector<DensityField>& testing,
                           const fs::path& out_dir) {
    auto report = validate(artifact, testing);
    io::write_text(out_dir / "metrics.csv", report.to_csv());
    return report;
}

std::vector<DensityField> testing_densities(const RunConfig& config, const RomArtifact& artifact) {
    if (!config.train_end) throw_input("config: split.train_end is required");
    require(config.transform == artifact.transform, "config transform differs from the artifact transform");
    const auto data = ingest(config);
    std::optional<double> truncate;
    if (config.truncate_start) truncate = config.transform.forward_t(*config.truncate_start);
    const auto parts = split(data, config.transform.forward_t(*config.train_end), truncate);
    const Grid grid = artifact.grid.build();
    std::vector<DensityField> out;
    for (std::size_t k = 0; k < parts.testing.size(); ++k) {
        out.push_back(parts.testing.density_at(k, grid, config.bandwidth));
    }
    return out;
}

}  // namespace fprom
