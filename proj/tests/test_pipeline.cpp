#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <unistd.h>

#include "fprom/analytic.hpp"
#include "fprom/csv_io.hpp"
#include "fprom/pipeline.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fprom;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("fprom_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

// f3 densities (mu = 1, D = 0.5) at t = 1.0, 1.25, ..., 2.5 plus a manifest.
fs::path write_f3_series(const TempDir& dir) {
    const auto g = Grid::uniform(-10.0, 20.0, 513);
    std::vector<io::ManifestEntry> entries;
    for (int k = 0; k < 7; ++k) {
        const double t = 1.0 + 0.25 * k;
        const std::string name = "f3_" + std::to_string(k) + ".csv";
        io::write_density_csv(dir / name, analytic::f3_density(g, t, 1.0, 0.5));
        entries.push_back({t, name});
    }
    io::write_manifest(dir / "manifest.csv", entries);
    return dir / "manifest.csv";
}

json f3_config(const fs::path& manifest) {
    return json{{"input", {{"mode", "densities"}, {"path", manifest.string()}}},
                {"split", {{"train_end", 2.0}}},
                {"calibration",
                 {{"method", "loss_minimization"},
                  {"budget", 300},
                  {"bounds", {{0.0, 3.0}, {0.0, 2.0}}}}},
                {"smoothing", {{"lambda", 1e-10}}},
                {"solver", {{"dt", 0.01}}}};
}

}  // namespace

TEST(CsvIo, DensityRoundTripIsBitExact) {
    TempDir dir;
    const auto g = Grid::uniform(-1.0, 2.0, 37);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-g.node(i) * g.node(i)) / 3.0 + 1e-17 * i;
    const DensityField f(g, v, 0.0);
    io::write_density_csv(dir / "f.csv", f);
    const auto back = io::read_density_csv(dir / "f.csv", 4.0);
    EXPECT_EQ(back.grid(), g);
    EXPECT_EQ(std::vector<double>(back.values().begin(), back.values().end()), v);
    EXPECT_EQ(back.time(), 4.0);
}

TEST(CsvIo, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 123456789.125}) {
        EXPECT_EQ(io::parse_double(io::format_double(v), "x"), v);
    }
}

TEST(CsvIo, EnsembleRoundTrip) {
    TempDir dir;
    write_file(dir / "e.csv",
               "traj_id,t,x\n"
               "0,0,1\n0,0.5,2\n0,1,3\n0,1.5,4\n0,2,5\n"
               "1,0,1.5\n1,0.5,2.5\n1,1,3.5\n1,1.5,4.5\n1,2,5.5\n"
               "2,0,-1\n2,0.5,-2\n2,1,-3\n2,1.5,-4\n2,2,-5\n");
    const auto ens = io::read_ensemble_csv(dir / "e.csv");
    EXPECT_EQ(ens.n_realizations(), 3u);
    EXPECT_EQ(ens.n_times(), 5u);
    EXPECT_EQ(ens.at(1, 2), 3.5);
    EXPECT_EQ(ens.at(2, 4), -5.0);
    io::write_ensemble_csv(dir / "e2.csv", ens);
    EXPECT_EQ(io::read_ensemble_csv(dir / "e2.csv").samples(), ens.samples());
}

TEST(CsvIo, NonFiniteValueNamesFileAndLine) {
    TempDir dir;
    write_file(dir / "bad.csv", "x,f\n0,1\n0.5,nan\n1,1\n");
    try {
        io::read_density_csv(dir / "bad.csv");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::input);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("bad.csv"), std::string::npos) << msg;
        EXPECT_NE(msg.find(":3"), std::string::npos) << msg;
    }
}

TEST(CsvIo, RaggedEnsembleIsRejected) {
    TempDir dir;
    write_file(dir / "e.csv", "traj_id,t,x\n0,0,1\n0,1,2\n1,0,1\n");
    EXPECT_FPROM_ERROR(io::read_ensemble_csv(dir / "e.csv"), ErrorKind::input);
    write_file(dir / "h.csv", "id,t,x\n0,0,1\n");
    EXPECT_FPROM_ERROR(io::read_ensemble_csv(dir / "h.csv"), ErrorKind::input);
}

TEST(Ingest, DensityListWithUnorderedManifest) {
    TempDir dir;
    const auto g = Grid::uniform(-5.0, 5.0, 65);
    const std::vector<double> times{0.3, 0.1, 0.4, 0.2};
    std::string manifest = "time,path\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        const auto name = "d" + std::to_string(k) + ".csv";
        io::write_density_csv(dir / name, analytic::f3_density(g, 1.0 + times[k], 0.0, 0.5));
        manifest += io::format_double(times[k]) + "," + name + "\n";
    }
    write_file(dir / "m.csv", manifest);
    RunConfig cfg;
    cfg.mode = InputMode::densities;
    cfg.input = dir / "m.csv";
    const auto data = ingest(cfg);
    ASSERT_EQ(data.size(), 4u);
    EXPECT_FALSE(data.is_ensemble());
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_NEAR(data.times[k], 0.1 * (k + 1), 1e-15);
        EXPECT_EQ(data.densities[k].time(), data.times[k]);
    }
    EXPECT_LT(moments(data.densities[0]).variance, moments(data.densities[3]).variance);
}

TEST(Ingest, MissingInputIsAnInputError) {
    RunConfig cfg;
    cfg.input = "/nonexistent/fprom/data.csv";
    EXPECT_FPROM_ERROR(ingest(cfg), ErrorKind::input);
    cfg.input.clear();
    EXPECT_FPROM_ERROR(ingest(cfg), ErrorKind::input);
}

TEST(Ingest, LogTimeTransformOnGeometricAxis) {
    TempDir dir;
    std::string csv = "traj_id,t,x\n";
    for (int r = 0; r < 3; ++r) {
        for (int k = 0; k < 4; ++k) {
            csv += std::to_string(r) + "," + io::format_double(std::exp(static_cast<double>(k))) + "," +
                   std::to_string(r + k + 1) + "\n";
        }
    }
    write_file(dir / "e.csv", csv);
    RunConfig cfg;
    cfg.input = dir / "e.csv";
    cfg.transform.kind = TransformKind::log_x_log_t;
    const auto data = ingest(cfg);
    ASSERT_EQ(data.size(), 4u);
    EXPECT_NEAR(data.times[3], 3.0, 1e-12);
    EXPECT_NEAR(data.slices[2][1], std::log(4.0), 1e-15);
}

TEST(Split, SpecExamples) {
    std::vector<double> t;
    for (int k = 0; k <= 10; ++k) t.push_back(k);
    const auto s = split(t, 7.0);
    EXPECT_EQ(s.train_size(), 8u);
    EXPECT_EQ(s.test_size(), 3u);
    EXPECT_EQ(s.test_first, 8u);
    const auto tr = split(t, 7.0, 5.0);
    EXPECT_EQ(tr.train_first, 5u);
    EXPECT_EQ(tr.train_last, 7u);
    EXPECT_FPROM_ERROR(split(t, 10.0), ErrorKind::infeasible);
    EXPECT_FPROM_ERROR(split(t, -1.0), ErrorKind::infeasible);
    EXPECT_FPROM_ERROR(split(t, 3.0, 4.0), ErrorKind::infeasible);
}

TEST(Split, PartitionsEveryLevelAfterTruncation) {
    std::vector<double> t;
    for (int k = 0; k < 25; ++k) t.push_back(0.1 * k);
    for (double end : {0.0, 0.35, 1.2, 2.3}) {
        const auto s = split(t, end);
        EXPECT_EQ(s.train_first, 0u);
        EXPECT_EQ(s.train_last + 1, s.test_first);
        EXPECT_EQ(s.train_size() + s.test_size(), t.size());
        EXPECT_LE(t[s.train_last], end + 1e-12);
        EXPECT_GT(t[s.test_first], end);
    }
}

TEST(Config, UnknownKeyIsAnInputError) {
    EXPECT_FPROM_ERROR(parse_config(json{{"inputs", {}}}, "."), ErrorKind::input);
    EXPECT_FPROM_ERROR(parse_config(json{{"solver", {{"dtt", 0.1}}}}, "."), ErrorKind::input);
    EXPECT_FPROM_ERROR(parse_config(json{{"solver", {{"dt", "fast"}}}}, "."), ErrorKind::input);
    EXPECT_FPROM_ERROR(parse_config(json{{"transform", "sqrt"}}, "."), ErrorKind::input);
}

TEST(Config, DefaultsAreRecorded) {
    const auto cfg = parse_config(json{{"input", {{"path", "data.csv"}}}}, "/base");
    EXPECT_EQ(cfg.input, fs::path("/base/data.csv"));
    EXPECT_EQ(cfg.solver.dt, 1e-3);
    EXPECT_EQ(cfg.method, CalibrationMethod::moment_regression);
    auto has = [&](const std::string& key) {
        return std::find(cfg.defaulted.begin(), cfg.defaulted.end(), key) != cfg.defaulted.end();
    };
    EXPECT_TRUE(has("solver.dt"));
    EXPECT_TRUE(has("kde.bandwidth"));
    EXPECT_FALSE(has("input.path"));
}

TEST(Config, OutputDirectoryResolution) {
    ::unsetenv(kOutputDirEnv);
    EXPECT_EQ(resolve_output_dir(""), fs::path("fprom_out"));
    ::setenv(kOutputDirEnv, "/tmp/from_env", 1);
    EXPECT_EQ(resolve_output_dir(""), fs::path("/tmp/from_env"));
    EXPECT_EQ(resolve_output_dir("/explicit"), fs::path("/explicit"));
    ::unsetenv(kOutputDirEnv);
}

TEST(Pipeline, LossMinimizationOnDensityList) {
    TempDir dir;
    const auto cfg = parse_config(f3_config(write_f3_series(dir)), dir.path());
    const auto data = ingest(cfg);
    const auto outcome = train(cfg, data);
    const auto& model = outcome.artifact.model;
    EXPECT_NEAR(model.drift_poly()[0], 1.0, 0.02);
    EXPECT_NEAR(model.diffusion_poly()[0], 0.5, 0.01);
    EXPECT_EQ(outcome.artifact.train_first, 1.0);
    EXPECT_EQ(outcome.artifact.train_last, 2.0);
    EXPECT_NE(outcome.report.find("defaulted="), std::string::npos);
    EXPECT_NE(outcome.report.find("calibration.optimizer"), std::string::npos);

    // Forecast to twice the training end and compare with the closed form.
    const auto pred = predict(outcome.artifact, 4.0, {});
    ASSERT_EQ(pred.densities.size(), 1u);
    EXPECT_TRUE(pred.reconstructed.empty());
    const auto& f = pred.densities.back();
    EXPECT_NEAR(f.time(), 4.0, 1e-12);
    const auto exact = analytic::f3_density(f.grid(), 4.0, 1.0, 0.5);
    EXPECT_LT(kl_divergence(exact, f), 1e-3);

    const auto metrics = validate(outcome.artifact, testing_densities(cfg, outcome.artifact));
    ASSERT_EQ(metrics.rows.size(), 2u);
    EXPECT_NEAR(metrics.final_row().time, 2.5, 1e-12);
    EXPECT_LT(metrics.final_row().kl, 1e-3);
}

TEST(Pipeline, PredictRejectsBadTimes) {
    TempDir dir;
    const auto cfg = parse_config(f3_config(write_f3_series(dir)), dir.path());
    const auto art = train(cfg, ingest(cfg)).artifact;
    EXPECT_FPROM_ERROR(predict(art, 3.0, {0.5}), ErrorKind::infeasible);
    EXPECT_FPROM_ERROR(predict(art, 1.5, {}), ErrorKind::infeasible);
    EXPECT_FPROM_ERROR(predict(art, 3.0, {3.5}), ErrorKind::infeasible);
}

TEST(Pipeline, ValidateOnOwnPredictionsIsZero) {
    TempDir dir;
    const auto cfg = parse_config(f3_config(write_f3_series(dir)), dir.path());
    const auto art = train(cfg, ingest(cfg)).artifact;
    const auto pred = predict(art, 3.0, {2.5});
    const auto m = validate(art, pred.densities);
    for (const auto& row : m.rows) {
        EXPECT_NEAR(row.kl, 0.0, 1e-12);
        EXPECT_NEAR(row.l1, 0.0, 1e-12);
    }
    EXPECT_NE(m.to_csv().find("# final"), std::string::npos);
}

TEST(Pipeline, ArtifactSerializationIsStable) {
    TempDir dir;
    const auto cfg = parse_config(f3_config(write_f3_series(dir)), dir.path());
    const auto art = train(cfg, ingest(cfg)).artifact;
    save_artifact(dir / "a.json", art);
    const auto loaded = load_artifact(dir / "a.json");
    save_artifact(dir / "b.json", loaded);
    EXPECT_EQ(io::read_text(dir / "a.json"), io::read_text(dir / "b.json"));
    EXPECT_EQ(loaded.model, art.model);
    EXPECT_EQ(loaded.grid, art.grid);
    write_file(dir / "c.json", "{\"format\": \"something\"}");
    EXPECT_FPROM_ERROR(load_artifact(dir / "c.json"), ErrorKind::input);
    write_file(dir / "d.json", "{not json");
    EXPECT_FPROM_ERROR(load_artifact(dir / "d.json"), ErrorKind::input);
}

TEST(Pipeline, RunTrainWritesArtifactAndReport) {
    TempDir dir;
    auto doc = f3_config(write_f3_series(dir));
    doc["output_dir"] = (dir / "out").string();
    const auto cfg = parse_config(doc, dir.path());
    run_train(cfg);
    EXPECT_TRUE(fs::exists(dir / "out" / "artifact.json"));
    EXPECT_TRUE(fs::exists(dir / "out" / "run_report.txt"));
    const auto art = load_artifact(dir / "out" / "artifact.json");
    run_predict(art, 3.0, {2.5}, dir / "out");
    EXPECT_EQ(io::read_density_list(dir / "out" / "manifest.csv").size(), 2u);
    EXPECT_FALSE(fs::exists(dir / "out" / "reconstructed_manifest.csv"));
}

TEST(Pipeline, MomentRegressionOnEnsemble) {
    TempDir dir;
    SdeSpec sde;
    sde.drift_params = {1.0, 0.0};
    sde.noise_params = {1.0, 0.0};
    SimPlan plan;
    plan.n_trajectories = 4000;
    plan.dt = 1e-2;
    plan.horizon = 2.0;
    plan.stride = 10;
    plan.seed = 8;
    plan.x0 = {InitialCondition::Kind::normal, 0.0, 0.5};
    io::write_ensemble_csv(dir / "e.csv", simulate(sde, plan));
    const json doc{{"input", {{"path", "e.csv"}}},
                   {"grid", {{"x_min", -6.0}, {"x_max", 10.0}, {"n_points", 257}}},
                   {"split", {{"train_end", 1.5}}},
                   {"solver", {{"dt", 0.01}}}};
    const auto cfg = parse_config(doc, dir.path());
    const auto art = train(cfg, ingest(cfg)).artifact;
    EXPECT_NEAR(art.model.drift_poly()[0], 1.0, 0.1);
    EXPECT_NEAR(art.model.diffusion_poly()[0], 0.5, 0.05);
    EXPECT_EQ(art.calibration.method, "moment_regression");
    EXPECT_EQ(art.calibration.optimizer, "none");
    ASSERT_TRUE(art.calibration.loss.has_value());
    EXPECT_TRUE(std::isfinite(*art.calibration.loss));
}

TEST(Pipeline, EnsembleWithoutGridIsAnInputError) {
    TempDir dir;
    write_file(dir / "e.csv", "traj_id,t,x\n0,0,1\n0,1,2\n0,2,3\n1,0,0\n1,1,1\n1,2,1\n");
    const auto cfg = parse_config(json{{"input", {{"path", "e.csv"}}}, {"split", {{"train_end", 1.0}}}}, dir.path());
    EXPECT_FPROM_ERROR(train(cfg, ingest(cfg)), ErrorKind::input);
}

TEST(Pipeline, LogTransformReconstructsOriginalUnits) {
    TempDir dir;
    // Geometric Brownian motion with log x ~ N(t/2, 0.25 + t/2).
    SdeSpec sde;
    sde.drift_params = {0.5, 0.0};
    sde.noise_params = {std::sqrt(0.5), 0.0};
    SimPlan plan;
    plan.n_trajectories = 3000;
    plan.dt = 1e-2;
    plan.horizon = 1.0;
    plan.stride = 10;
    plan.seed = 17;
    plan.x0 = {InitialCondition::Kind::normal, 0.0, 0.5};
    const auto log_paths = simulate(sde, plan);
    std::vector<double> raw(log_paths.samples());
    for (double& v : raw) v = std::exp(v);
    io::write_ensemble_csv(dir / "e.csv", TrajectoryEnsemble(log_paths.times(), log_paths.n_realizations(), raw));

    const json doc{{"input", {{"path", "e.csv"}}},
                   {"transform", "log_x"},
                   {"grid", {{"x_min", -3.0}, {"x_max", 3.5}, {"n_points", 257}}},
                   {"split", {{"train_end", 0.6}}},
                   {"solver", {{"dt", 0.01}}},
                   {"predict", {{"reconstruct_samples", 20000}}}};
    const auto cfg = parse_config(doc, dir.path());
    const auto art = train(cfg, ingest(cfg)).artifact;
    EXPECT_EQ(art.transform.kind, TransformKind::log_x);
    EXPECT_NEAR(art.model.drift_poly()[0], 0.5, 0.1);

    fs::create_directories(dir / "pred");
    const auto pred = run_predict(art, 1.0, {}, dir / "pred", 20000, 1);
    ASSERT_EQ(pred.reconstructed.size(), 1u);
    EXPECT_TRUE(fs::exists(dir / "pred" / "reconstructed_manifest.csv"));
    const auto& r = pred.reconstructed.front();
    EXPECT_NEAR(r.grid().x_min(), std::exp(-3.0), 1e-12);
    EXPECT_NEAR(r.mass(), 1.0, 1e-6);
    const double expected = oracle::lognormal_mean(0.5, 0.75);
    EXPECT_NEAR(moments(r).mean, expected, 0.05 * expected);
}
