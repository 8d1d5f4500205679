#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fprom/calibrate.hpp"
#include "fprom/coefficients.hpp"
#include "fprom/density.hpp"
#include "fprom/fpe_solver.hpp"
#include "fprom/langevin_sim.hpp"
#include "fprom/transform.hpp"

namespace fprom {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "FPROM_OUTPUT_DIR";

enum class InputMode { ensemble, densities };
enum class CalibrationMethod { moment_regression, loss_minimization };

struct GridSpec {
    double x_min = 0.0;
    double x_max = 1.0;
    std::size_t n_points = 0;

    Grid build() const { return Grid::uniform(x_min, x_max, n_points); }
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct SimulationSettings {
    SdeSpec sde;
    SimPlan plan;
};

/**
 * Everything a pipeline run needs. Times (split points, prediction times)
 * are given in the data's original units; the pipeline maps them through the
 * transform. Keys left out of the config file are filled with defaults and
 * listed in `defaulted` so the run report can echo them.
 */
struct RunConfig {
    InputMode mode = InputMode::ensemble;
    std::filesystem::path input;
    TransformSpec transform;
    std::optional<GridSpec> grid;
    std::optional<double> bandwidth;  // nullopt = normal-reference rule

    CalibrationMethod method = CalibrationMethod::moment_regression;
    int drift_degree = 0;
    int diffusion_degree = 0;
    OptimizerKind optimizer = OptimizerKind::nelder_mead;
    std::size_t budget = 300;
    Distance distance = Distance::kl;
    std::vector<ParameterBounds> bounds;
    std::size_t target_count = 4;  // 0 = every training level after the first

    SolverConfig solver;
    double smoothing_lambda = kDefaultTikhonovLambda;
    int smoothing_degree = 2;

    std::optional<double> train_end;
    std::optional<double> truncate_start;

    std::optional<double> horizon;
    std::vector<double> record_times;
    std::size_t reconstruct_samples = 100000;

    std::size_t km_bins = 10;
    std::optional<SimulationSettings> simulation;

    std::filesystem::path output_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    std::vector<std::string> defaulted;
};

/// Parses a JSON config; relative paths resolve against base_dir.
/// Throws Error(input) for malformed documents.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Output directory: explicit value, else $FPROM_OUTPUT_DIR, else "fprom_out".
std::filesystem::path resolve_output_dir(const std::filesystem::path& configured);

/**
 * In-memory dataset on a model-space time axis. Ensemble input keeps one
 * sample vector per time level; density-list input keeps the densities.
 */
struct Dataset {
    TransformSpec transform;
    std::vector<double> times;
    std::vector<std::vector<double>> slices;
    std::vector<DensityField> densities;

    bool is_ensemble() const noexcept { return !slices.empty(); }
    std::size_t size() const noexcept { return times.size(); }

    /// Subset of time levels [first, last].
    Dataset subset(std::size_t first, std::size_t last) const;

    /// Density at level k: the stored density (regridded if necessary) or a KDE of the slice.
    DensityField density_at(std::size_t k, const Grid& grid, std::optional<double> bandwidth) const;

    MomentSeries moment_series() const;
};

Dataset dataset_from_ensemble(const TrajectoryEnsemble& ens);

/// Loads and validates config.input, applying config.transform.
Dataset ingest(const RunConfig& config);

struct TimeSplit {
    std::size_t train_first = 0;
    std::size_t train_last = 0;
    std::size_t test_first = 0;
    std::size_t test_last = 0;

    std::size_t train_size() const { return train_last - train_first + 1; }
    std::size_t test_size() const { return test_last - test_first + 1; }
};

/// training = [truncate_start or t0, train_end], testing = (train_end, t_K].
/// Throws Error(infeasible) when either side would be empty.
TimeSplit split(const std::vector<double>& times, double train_end, std::optional<double> truncate_start = {});

struct DatasetSplit {
    Dataset training;
    Dataset testing;
};
DatasetSplit split(const Dataset& data, double train_end, std::optional<double> truncate_start = {});

struct CalibrationMetadata {
    std::string method;
    std::optional<double> loss;
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    std::string optimizer;
    std::size_t evaluations = 0;
};

/// Calibrated reduced-order model. Times are in model (transformed) units.
struct RomArtifact {
    GridSpec grid;
    CoefficientModel model;
    TransformSpec transform;
    DensityField initial;
    double train_first = 0.0;
    double train_last = 0.0;
    SolverConfig solver;  // record_times unused
    CalibrationMetadata calibration;

    nlohmann::json to_json() const;
    static RomArtifact from_json(const nlohmann::json& doc);
    std::string serialize() const;  // canonical text, trailing newline
};

void save_artifact(const std::filesystem::path& path, const RomArtifact& artifact);
RomArtifact load_artifact(const std::filesystem::path& path);

struct TrainOutcome {
    RomArtifact artifact;
    std::string report;  // key=value lines
    std::optional<CalibrationResult> calibration;
};

/// Builds the artifact from config without touching the filesystem beyond reading input.
TrainOutcome train(const RunConfig& config, const Dataset& data);

/// ingest + train + write artifact.json and run_report.txt into the output directory.
RomArtifact run_train(const RunConfig& config);

struct Prediction {
    std::vector<DensityField> densities;       // model space
    std::vector<DensityField> reconstructed;   // original units; empty for identity transform
};

/// Forward solve from the artifact's initial density. horizon and record_times
/// are in model units; horizon must exceed the training window end.
Prediction predict(const RomArtifact& artifact, double horizon, std::vector<double> record_times,
                   std::size_t reconstruct_samples = 100000, std::uint64_t seed = 0);

/// predict + write density CSVs and manifests into out_dir. Times in original units.
Prediction run_predict(const RomArtifact& artifact, double horizon, const std::vector<double>& record_times,
                       const std::filesystem::path& out_dir, std::size_t reconstruct_samples = 100000,
                       std::uint64_t seed = 0);

struct MetricRow {
    double time = 0.0;  // original units
    double kl = 0.0;
    double l1 = 0.0;
};

struct MetricsReport {
    std::vector<MetricRow> rows;
    MetricRow final_row() const { return rows.back(); }
    std::string to_csv() const;
};

/// Compares predictions with testing densities (regridded onto the artifact grid if needed).
MetricsReport validate(const RomArtifact& artifact, const std::vector<DensityField>& testing);

/// validate + write metrics.csv into out_dir.
MetricsReport run_validate(const RomArtifact& artifact, const std::vector<DensityField>& testing,
                           const std::filesystem::path& out_dir);

/// Testing densities of the configured split, on the artifact grid.
std::vector<DensityField> testing_densities(const RunConfig& config, const RomArtifact& artifact);

std::string to_string(CalibrationMethod m);
std::string to_string(Integrator i);
std::string to_string(Boundary b);

}  // namespace fprom
