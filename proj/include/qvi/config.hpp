#pragma once

#include "qvi/levy.hpp"
#include "qvi/solver.hpp"

#include <map>
#include <string>

namespace qvi {

// Flat "section.key" -> value map parsed from an INI-style config file.
// Unknown keys are hard errors at load time; the schema is documented in
// docs/config.md.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_ini(const std::string& text);

struct LoadedConfig {
    Problem problem;
    LevyModel levy;  // prepared
    SolveOptions options;
    std::vector<int> grid_nodes;  // per spatial axis
    int n_time = 200;
    std::size_t mc_paths = 10000;
    double mc_dt = 0.0;  // 0 = T / n_time
    std::uint64_t seed = 0;
    ConfigMap raw;
    std::string canonical;   // canonicalized key order, for hashing
    std::uint64_t hash = 0;  // fnv1a of `canonical`
};

LoadedConfig load_config_text(const std::string& text);
LoadedConfig load_config(const std::string& path);

// Canonical serialization: sorted "section.key = value" lines; hash is
// stable under key reordering of the source file.
std::string canonical_text(const ConfigMap& cfg);

}  // namespace qvi
