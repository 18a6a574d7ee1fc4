#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mixpersist/config.hpp"

namespace mixpersist {

struct RegistryEntry {
    std::string name;
    /// The statement the entry checks, with the result it is anchored to.
    std::string anchor;
    std::string expected;
    ExperimentConfig defaults;
};

[[nodiscard]] const std::vector<RegistryEntry>& registry();
[[nodiscard]] std::vector<std::string> registry_names();
/// Throws std::invalid_argument for unknown names.
[[nodiscard]] const RegistryEntry& find_entry(std::string_view name);
/// Human-readable description used by the describe verb.
[[nodiscard]] std::string describe_entry(const RegistryEntry& entry);

struct Assertion {
    std::string name;
    double value = 0.0;
    /// Inclusive upper bound on value unless `lower` is set.
    double bound = 0.0;
    bool lower = false;
    bool passed = false;
    /// Reported without pass/fail force.
    bool informational = false;
};

struct ExperimentReport {
    std::string entry;
    std::vector<Assertion> assertions;
    /// Every non-informational assertion passed (or assertions are disabled).
    bool passed = true;
    std::vector<std::filesystem::path> files;
    double seconds = 0.0;
};

/// Runs the entry named in the config and writes its CSVs, summary.txt, config.ini and a
/// metadata.json sidecar into config.output_dir. Nothing is written if the run throws.
/// Progress lines go to `log` when given.
ExperimentReport run_experiment(const ExperimentConfig& config, unsigned threads = 0, std::ostream* log = nullptr);

/// Lowercase file-name fragment of a descriptor: non-alphanumerics collapse to '_'.
[[nodiscard]] std::string spec_slug(const ProcessSpec& spec);

}  // namespace mixpersist
