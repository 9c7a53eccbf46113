#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cocycle/drivers.hpp"
#include "cocycle/errors.hpp"

namespace cocycle {

inline constexpr const char* kConfigVersion = "1";
inline constexpr const char* kLibraryVersion = "0.1.0";

/// Names accepted as task / subcommand.
const std::vector<std::string>& task_names();

/// Invalid configuration; `keys` lists every offending key path.
class SchemaError : public ValidationError {
public:
    SchemaError(std::vector<std::string> keys, const std::string& what);
    const std::vector<std::string>& keys() const noexcept { return keys_; }

private:
    std::vector<std::string> keys_;
};

struct ExperimentConfig {
    std::string version;
    std::uint64_t seed = 0;
    PotentialModel model;
    nlohmann::json model_json;
    std::string task;
    nlohmann::json params;
    int threads = 0;
    std::string output;  ///< empty when not configured
};

struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> task;  ///< subcommand; must agree with the file when both are present
};

/// Strict parse: unknown keys anywhere, a version mismatch or a missing seed raise SchemaError.
ExperimentConfig parse_config(const nlohmann::json& doc, const ConfigOverrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

PotentialModel parse_model(const nlohmann::json& doc);

struct OutputFile {
    std::string name;
    std::string sha256;
    std::vector<std::string> columns;  ///< empty for JSON files
};

struct RunManifest {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string task;
    double wall_time = 0.0;
    int threads = 0;
    std::string library_version = kLibraryVersion;
    std::vector<OutputFile> outputs;

    nlohmann::json to_json() const;
};

/// Runs the configured task and writes its CSV, JSON summary and manifest.json into `out_dir`.
RunManifest run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Canonical JSON of the resolved configuration (seed and task included).
nlohmann::json canonical_config(const ExperimentConfig& config);

std::string sha256_hex(std::string_view data);

/// Machine-readable error document for a failed run.
nlohmann::json error_report(const std::exception& error, const ExperimentConfig* config = nullptr);

}  // namespace cocycle
