#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mixpersist/registry.hpp"

using namespace mixpersist;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

ExperimentConfig small_oracle(const std::filesystem::path& dir) {
    ExperimentConfig c = find_entry("bm-oracle").defaults;
    c.experiment_id = "registry-test";
    c.n_paths = 2000;
    c.ladder = {1, 4, 16, 64};
    c.burn_in = 0;
    c.grid = LampertiLogPolicy{1e-3, 64, 256};
    c.output_dir = dir.string();
    return c;
}

}  // namespace

TEST_SUITE("registry") {

TEST_CASE("entries") {
    const auto names = registry_names();
    CHECK(names.size() == 7);
    CHECK(registry().size() == 7);
    for (const auto& n : names) {
        const auto& e = find_entry(n);
        CHECK(e.name == n);
        CHECK_FALSE(e.anchor.empty());
        CHECK(e.defaults.entry == n);
        CHECK_NOTHROW(e.defaults.validate());
    }
    CHECK_THROWS_AS((void)find_entry("nope"), std::invalid_argument);
    const auto text = describe_entry(find_entry("corollary-rl"));
    CHECK(text.find("theta_R(1/2) = 1/2") != std::string::npos);
    CHECK(text.find("[experiment]") != std::string::npos);
}

TEST_CASE("slugs") {
    CHECK(spec_slug(ProcessSpec::fbm(0.75)) == "fbm_h_0.75");
    CHECK(spec_slug(ProcessSpec::mixed_independent(1, 0.75, 1, 0.5)) == "mixed_fbm_a_1_h_0.75_b_1_k_0.5");
}

TEST_CASE("small run is deterministic across thread counts") {
    const auto root = std::filesystem::temp_directory_path() / "mixpersist_registry_test";
    std::filesystem::remove_all(root);
    const auto r1 = run_experiment(small_oracle(root / "a"), 1);
    const auto r2 = run_experiment(small_oracle(root / "b"), 2);
    CHECK(r1.entry == "bm-oracle");
    REQUIRE(r1.files.size() == r2.files.size());
    REQUIRE_FALSE(r1.assertions.empty());
    bool saw_summary = false, saw_meta = false;
    for (std::size_t i = 0; i < r1.files.size(); ++i) {
        const auto name = r1.files[i].filename().string();
        CHECK(name == r2.files[i].filename().string());
        CHECK(std::filesystem::exists(r1.files[i]));
        if (name == "metadata.json") {
            saw_meta = true;
            continue;  // carries a timestamp
        }
        if (name == "config.ini") continue;  // carries the output directory
        saw_summary = saw_summary || name == "summary.txt";
        CAPTURE(name);
        CHECK(slurp(r1.files[i]) == slurp(r2.files[i]));
    }
    CHECK(saw_summary);
    CHECK(saw_meta);
    const auto summary = slurp(root / "a" / "summary.txt");
    CHECK(summary.find(r1.passed ? "result: PASS" : "result: FAIL") != std::string::npos);
    // The emitted config reproduces the run's config.
    CHECK(load_config(root / "a" / "config.ini") == small_oracle(root / "a"));
    std::filesystem::remove_all(root);
}

TEST_CASE("short ladders skip the fit instead of failing") {
    const auto root = std::filesystem::temp_directory_path() / "mixpersist_registry_short";
    std::filesystem::remove_all(root);
    auto c = small_oracle(root);
    c.ladder = {4, 16, 64};
    c.burn_in = 2;
    c.n_paths = 500;
    CHECK_NOTHROW((void)run_experiment(c));
    CHECK(std::filesystem::exists(root / "summary.txt"));
    std::filesystem::remove_all(root);
}

TEST_CASE("no output on failure") {
    const auto root = std::filesystem::temp_directory_path() / "mixpersist_registry_fail";
    std::filesystem::remove_all(root);
    auto c = small_oracle(root);
    c.specs = {ProcessSpec::fbm(0.75)};
    CHECK_THROWS_AS((void)run_experiment(c), std::invalid_argument);
    CHECK_FALSE(std::filesystem::exists(root));
    c.entry = "not-registered";
    CHECK_THROWS((void)run_experiment(c));
    CHECK_FALSE(std::filesystem::exists(root));
}

}
