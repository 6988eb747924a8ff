#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace gossipfpp::cli {

// Configuration problems carry the offending field for CLI diagnostics.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

inline constexpr const char* kArtifactVersion = "gossipfpp 0.1.0";

struct ResultRecord {
    std::string config_hash;
    std::string artifact_version;
    std::string summary_path;
    std::string summary_json;      // deterministic content (also on disk)
    double duration_seconds = 0.0;  // volatile; never part of the outputs
};

nlohmann::json load_config_file(const std::string& path);

// Canonical form: defaults filled, keys ordered, numbers normalized. The
// config hash is computed over the canonical serialization.
nlohmann::json canonicalize(const nlohmann::json& config);
std::string config_hash(const nlohmann::json& canonical);

// Runs one experiment described by the config ("experiment" selects
// simulate | analytic | fquad | lattice | nash | sweep) and writes outputs
// under out_dir (atomic: temp file + rename). Throws ConfigError for invalid
// configs and std::runtime_error for runtime failures.
ResultRecord run_experiment(const nlohmann::json& config, const std::string& out_dir);

// Default output directory: $GOSSIPFPP_OUT or ".".
std::string default_out_dir();

}  // namespace gossipfpp::cli
