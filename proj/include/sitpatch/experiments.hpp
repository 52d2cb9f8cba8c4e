#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sitpatch/config.hpp"

// Experiment dispatch: runs one configured scenario and writes its
// figure-ready outputs plus a manifest of everything emitted.

namespace sit {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct ManifestEntry {
    std::string path;      // relative to the output directory
    std::string checksum;  // fnv1a-64 of the file bytes; empty for the manifest
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    nlohmann::json config_echo;
    std::string version = kToolkitVersion;
    double wall_seconds = 0.0;
    std::vector<ManifestEntry> outputs;
    std::vector<std::string> errors;

    bool ok() const { return errors.empty(); }
    nlohmann::json to_json() const;
};

// Executes the configured experiment, writing outputs atomically under
// config.output_dir, then the manifest itself as manifest.json. Partial
// failures are recorded in the manifest, not thrown.
RunManifest run(const ScenarioConfig& config);

// Effective worker count: SIT_PATCH_THREADS overrides the configured value.
int effective_threads(int configured);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace sit
