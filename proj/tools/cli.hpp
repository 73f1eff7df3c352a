#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace geocorr::cli {

inline constexpr int kSchemaVersion = 1;

/// A bad flag value. The message starts with the flag name.
class UsageError : public std::invalid_argument {
public:
    UsageError(const std::string& flag, const std::string& message)
        : std::invalid_argument(flag + ": " + message), flag_(flag) {}
    const std::string& flag() const noexcept { return flag_; }

private:
    std::string flag_;
};

struct ExperimentConfig {
    std::string command;
    int dim = 2;
    double radius = 1.0;
    std::string region = "cap:a=1.5707963267948966";
    double gamma = 0.5;
    std::vector<double> eps{0.16, 0.08, 0.04, 0.02};
    std::int64_t samples = 1'000'000;
    std::optional<std::uint64_t> seed;  ///< unset: GEOCORR_SEED, then 1
    int grid = 513;
    int workers = 0;
    std::int64_t chunk = 0;
    double r_min = 0.02;
    double r_max = 0.2;
    bool richardson = true;
    std::string field = "x3";
    std::vector<double> rs{0.2, 0.1, 0.05, 0.025, 0.0125};
    int degree = 2;
    std::optional<double> mollifier_s;
    std::optional<double> volume_constraint;
    std::string simd = "auto";
    std::string json_path;    // not part of the echoed config
    std::string output_path;  // not part of the echoed config
};

/// Experiment settings only; output paths are left out so reports from different paths compare equal.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Overwrites the fields present in `j`. Unknown keys raise UsageError for --config.
void apply_config_json(const nlohmann::json& j, ExperimentConfig& config);

/// Fills the seed from GEOCORR_SEED or the default and checks every field.
void resolve_and_validate(ExperimentConfig& config);

/// Runs one command. `args` excludes the program name. Returns the process exit code:
/// 0 on success, 2 on usage errors, 1 on numerical failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace geocorr::cli
