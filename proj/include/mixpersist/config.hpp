#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mixpersist/process_spec.hpp"
#include "mixpersist/time_grid.hpp"

namespace mixpersist {

/// Everything needed to rerun an experiment. On disk it is an INI-like text file:
///
///   [experiment]  id, entry, master_seed, n_paths, output_dir, assertions
///   [process]     specs            (descriptors separated by ';')
///   [ladder]      horizons         (comma separated)
///   [grid]        policy (uniform | lamperti_log), t_min, t_max, points
///   [estimation]  level, burn_in, extrapolate
///   [parameters]  entry-specific numbers, see kParameterKeys
///
/// Lines starting with '#' or ';' are comments. Unknown sections and keys are errors.
struct ExperimentConfig {
    std::string experiment_id;
    std::string entry;
    std::uint64_t master_seed = 0;
    std::size_t n_paths = 100000;
    std::string output_dir;
    bool assertions = true;
    std::vector<ProcessSpec> specs;
    std::vector<double> ladder;
    GridPolicy grid = LampertiLogPolicy{1e-3, 4096.0, 4096};
    double level = 1.0;
    std::size_t burn_in = 2;
    bool extrapolate = true;
    std::map<std::string, std::vector<double>> parameters;

    /// Semantic checks shared by the parser and programmatic construction.
    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct ParameterKey {
    std::string_view name;
    /// 0 = any positive length list, otherwise the exact length.
    std::size_t arity;
};

inline constexpr ParameterKey kParameterKeys[] = {
    {"gamma", 1},       {"window_start", 1}, {"window_end", 1}, {"alphas", 0},      {"x0", 1},
    {"tau_min", 1},     {"tau_max", 1},      {"tau_points", 1}, {"drift_alpha", 1}, {"drift_c", 1},
    {"drift_check", 1}, {"c0_alpha", 1},
};

/// Parse error with the offending line (1-based, 0 when the problem is a missing key) and key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, std::string key, const std::string& message);
    [[nodiscard]] std::size_t line() const { return line_; }
    [[nodiscard]] const std::string& key() const { return key_; }

private:
    std::size_t line_;
    std::string key_;
};

[[nodiscard]] ExperimentConfig parse_config(std::string_view text);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& file);
/// Canonical text; parse_config(emit_config(c)) == c.
[[nodiscard]] std::string emit_config(const ExperimentConfig& config);

}  // namespace mixpersist
