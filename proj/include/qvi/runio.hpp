#pragma once

#include "qvi/config.hpp"

#include <string>

namespace qvi {

// Flat binary grid container: 64-byte header (magic "QVIF", version, dtype,
// ndims, dims, payload count), then count little-endian f64 values in
// row-major order with axis order (t, x1, ..., xd).
struct QvifData {
    std::vector<std::uint64_t> dims;
    std::vector<double> values;
};

void write_qvif(const std::string& path, const QvifData& data);
QvifData read_qvif(const std::string& path);

struct RunManifest {
    std::uint64_t config_hash = 0;
    std::vector<int> grid_nodes;
    int n_time = 0;
    double tol = 0.0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    std::map<std::string, std::uint64_t> checksums;  // file -> fnv1a
};

// Layout under run_dir/: manifest.json, config.ini, value.qvif, value.csv,
// policy.csv, report.json.
struct RunDir {
    std::string path;
    RunManifest manifest;
    Grid grid;
    SolveResult result;
};

void save_run(const std::string& run_dir, const LoadedConfig& config,
              const Grid& grid, const SolveResult& result,
              double wall_seconds);

// Reconstructs the grid and value/policy fields; verifies every artifact
// checksum recorded in the manifest and errors on mismatch.
RunDir load_run(const std::string& run_dir, const LoadedConfig& config);

std::uint64_t file_checksum(const std::string& path);

}  // namespace qvi
