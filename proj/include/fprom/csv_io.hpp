#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fprom/density.hpp"
#include "fprom/km_estimate.hpp"

namespace fprom::io {

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

/// Parses a finite double; Error(input) naming file and line otherwise.
double parse_double(std::string_view text, const std::string& where);

/// Two columns `x,f` with a header line.
void write_density_csv(const std::filesystem::path& path, const DensityField& f);

/// Reads a density CSV; the x column must be a uniform grid. The time stamp
/// is not stored in the file and is taken from the caller.
DensityField read_density_csv(const std::filesystem::path& path, double time_stamp = 0.0);

/// Long format `traj_id,t,x` with a header line.
void write_ensemble_csv(const std::filesystem::path& path, const TrajectoryEnsemble& ens);
TrajectoryEnsemble read_ensemble_csv(const std::filesystem::path& path);

struct ManifestEntry {
    double time = 0.0;
    std::filesystem::path path;
};

/// Lines `time,path`; relative paths resolve against the manifest's directory.
/// Entries are returned sorted by time.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

std::vector<DensityField> read_density_list(const std::filesystem::path& manifest);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

}  // namespace fprom::io
