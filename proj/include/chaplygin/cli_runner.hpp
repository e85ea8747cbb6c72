#ifndef CHAPLYGIN_CLI_RUNNER_HPP
#define CHAPLYGIN_CLI_RUNNER_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "chaplygin/ball_model.hpp"
#include "chaplygin/noise_config.hpp"
#include "chaplygin/sde_engine.hpp"

namespace chaplygin {

inline constexpr const char* kArtifactVersion = "1.0.0";

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitConfig = 2, kExitNumerical = 3 };

/// Malformed or inconsistent configuration; maps to kExitConfig.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct InertiaSpec {
    std::string kind = "identity";  // identity | masses | matrix | random
    std::vector<double> masses;
    std::filesystem::path matrix_path;
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    int n = 3;
    InertiaSpec inertia;
    NoiseConfig noise;
    IntegratorConfig integrator;
    nlohmann::json experiment = nlohmann::json::object();
    std::filesystem::path output_dir = ".";
    /// Effective document (after overrides); its hash identifies the run.
    nlohmann::json effective;
    std::string hash;
};

/// Parses a config document. Relative paths resolve against base_dir.
/// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                              std::optional<std::uint64_t> seed_override = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& file,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

/// Reads an m x m whitespace-separated matrix.
Eigen::MatrixXd read_matrix_file(const std::filesystem::path& file, int m);

InertiaOperator build_inertia(const ExperimentConfig& cfg);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Shortest decimal representation that round-trips.
std::string format_double(double x);

struct RunOptions {
    int workers = 1;
};

int cmd_verify(const ExperimentConfig& cfg, const RunOptions& opts);
int cmd_simulate(const ExperimentConfig& cfg, const RunOptions& opts);
int cmd_generator_test(const ExperimentConfig& cfg, const RunOptions& opts);
int cmd_sphere_test(const ExperimentConfig& cfg, const RunOptions& opts);
int cmd_ham_check(const ExperimentConfig& cfg, const RunOptions& opts);
int cmd_drift_report(const ExperimentConfig& cfg, const RunOptions& opts);

/// Entry point of the command-line tool; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace chaplygin

#endif  // CHAPLYGIN_CLI_RUNNER_HPP
