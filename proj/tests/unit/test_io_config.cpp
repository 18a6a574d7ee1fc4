#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mixpersist/config.hpp"
#include "mixpersist/io.hpp"
#include "mixpersist/registry.hpp"

using namespace mixpersist;

namespace {

template <class T>
T read_le(const std::string& s, std::size_t at) {
    T v;
    std::memcpy(&v, s.data() + at, sizeof v);
    return v;
}

ExperimentConfig base_config() {
    ExperimentConfig c;
    c.experiment_id = "round-trip";
    c.entry = "corollary-rl";
    c.master_seed = 123;
    c.n_paths = 1000;
    c.output_dir = "out/x";
    c.specs = {ProcessSpec::fbm(0.75)};
    c.ladder = {4, 16, 64};
    c.grid = LampertiLogPolicy{1e-3, 64, 512};
    c.burn_in = 1;
    return c;
}

}  // namespace

TEST_SUITE("io_config") {

TEST_CASE("covariance container round-trip and layout") {
    const auto cov = cov_matrix(ProcessSpec::fbm(0.3), TimeGrid::lamperti_log(0.1, 10, 6));
    std::stringstream ss;
    write_covariance(ss, cov);
    const std::string bytes = ss.str();
    CHECK(bytes.substr(0, 4) == "MXPB");
    CHECK(read_le<std::uint32_t>(bytes, 4) == kContainerVersion);
    CHECK(read_le<std::uint32_t>(bytes, 8) == 1u);
    const auto len = read_le<std::uint32_t>(bytes, 12);
    CHECK(bytes.substr(16, len) == "fbm(H=0.3)");
    std::size_t at = 16 + len;
    CHECK(read_le<std::uint32_t>(bytes, at) == 1u);  // LampertiLog
    CHECK(read_le<std::uint32_t>(bytes, at + 4) == 1u);  // origin included
    CHECK(read_le<double>(bytes, at + 8) == 0.1);
    CHECK(read_le<double>(bytes, at + 16) == 10.0);
    CHECK(read_le<std::uint64_t>(bytes, at + 24) == 6u);
    const auto count = read_le<std::uint64_t>(bytes, at + 32);
    CHECK(count == cov.size());
    at += 40 + 8 * count;
    CHECK(read_le<std::uint64_t>(bytes, at) == cov.size());
    CHECK(read_le<std::uint64_t>(bytes, at + 8) == cov.size());
    CHECK(bytes.size() == at + 48 + 8 * cov.entries.size());
    CHECK(read_le<double>(bytes, at + 48 + 8 * 8) == cov.entries[8]);

    const auto back = read_covariance(ss);
    CHECK(back.spec_descriptor == cov.spec_descriptor);
    CHECK(back.grid == cov.grid);
    CHECK(back.entries == cov.entries);
    CHECK(back.factor == cov.factor);
}

TEST_CASE("truncated or foreign containers are rejected") {
    const auto cov = cov_matrix(ProcessSpec::brownian(), TimeGrid::explicit_times({1, 2}));
    std::stringstream ss;
    write_covariance(ss, cov);
    const std::string bytes = ss.str();
    for (const std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{20}, bytes.size() - 1}) {
        std::istringstream is(bytes.substr(0, cut));
        CAPTURE(cut);
        CHECK_THROWS_AS((void)read_covariance(is), FormatError);
    }
    std::string wrong = bytes;
    wrong[0] = 'X';
    std::istringstream is(wrong);
    CHECK_THROWS_AS((void)read_covariance(is), FormatError);

    const auto paths = sample_process(ProcessSpec::brownian(), TimeGrid::uniform(1, 4), 3, {});
    std::stringstream ps;
    write_paths_binary(ps, paths);
    CHECK_THROWS_AS((void)read_covariance(ps), FormatError);
}

TEST_CASE("path container round-trip") {
    const auto seed = SeedPolicy{9, 77, 5};
    const auto paths = sample_process(ProcessSpec::mixed_independent(1, 0.75, 1, 0.5), TimeGrid::uniform(2, 8), 7, seed);
    const auto file = std::filesystem::temp_directory_path() / "mixpersist_paths_test" / "p.mxpb";
    write_paths_binary(file, paths);
    const auto back = read_paths_binary(file);
    CHECK(back.spec == paths.spec);
    CHECK(back.grid == paths.grid);
    CHECK(back.n_paths == 7);
    CHECK(back.values == paths.values);
    CHECK(back.seed == seed);
    std::filesystem::remove_all(file.parent_path());

    std::ostringstream csv;
    write_paths_csv(csv, paths);
    std::istringstream lines(csv.str());
    std::string first;
    std::getline(lines, first);
    CHECK(first.substr(0, 2) == "0,");
    std::size_t rows = 0;
    for (std::string l; std::getline(lines, l);) ++rows;
    CHECK(rows == 7);
}

TEST_CASE("persistence CSV round-trip") {
    std::vector<PersistenceEstimate> es{proportion_estimate(1, 700, 1000, 10), proportion_estimate(4, 0, 1000, 20)};
    std::stringstream ss;
    write_persistence_csv(ss, es);
    CHECK(ss.str().rfind("T,p_hat,ci_low,ci_high,n_paths,grid_points_used\n", 0) == 0);
    const auto back = read_persistence_csv(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].p_hat == es[0].p_hat);
    CHECK(back[0].ci_low == es[0].ci_low);
    CHECK(back[0].se == doctest::Approx(es[0].se));
    CHECK(back[1].zero_count);
    CHECK(back[1].grid_points_used == 20);
    std::istringstream bad("T,p\n1,2\n");
    CHECK_THROWS_AS((void)read_persistence_csv(bad), FormatError);
}

TEST_CASE("fit and spectral CSVs") {
    ExponentFit f;
    f.theta_hat = 0.25;
    f.burn_in = 2;
    std::ostringstream os;
    write_fit_csv(os, {{"mixed_fbm(a=1,H=0.75,b=1,K=0.5)", f}});
    CHECK(os.str().rfind("spec,theta_hat,stderr,intercept,r_squared,T_min,T_max,burn_in\n\"mixed_fbm(a=1,H=0.75,b=1,K=0.5)\",0.25,",
                         0) == 0);
    std::ostringstream sp;
    write_spectral_csv(sp, SpectralDensity{{0, 1}, {0.5, 0.25}, 0.5});
    CHECK(sp.str() == "x,p\n0,0.5\n1,0.25\n");
    std::ostringstream h;
    write_h1_csv(h, 0.25, 1.0, {1000.0});
    CHECK(h.str().rfind("tau,scaled_h1\n1000,", 0) == 0);
}

TEST_CASE("config round-trip, randomized") {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> U(0.05, 0.95);
    const auto names = registry_names();
    for (int trial = 0; trial < 50; ++trial) {
        ExperimentConfig c = base_config();
        c.entry = names[rng() % names.size()];
        c.master_seed = rng();
        c.n_paths = 100 + rng() % 100000;
        c.assertions = rng() % 2;
        c.extrapolate = rng() % 2;
        c.level = U(rng) * 3;
        const double H = U(rng), K = U(rng) * H;
        c.specs = {ProcessSpec::mixed_independent(U(rng), H, U(rng), K), ProcessSpec::riemann_liouville(U(rng) * 2),
                   ProcessSpec::integrated_fbm(H)};
        c.ladder.clear();
        double T = U(rng);
        for (int i = 0; i < 6; ++i) c.ladder.push_back(T *= 1 + 3 * U(rng));
        if (rng() % 2) {
            c.grid = UniformPolicy{c.ladder.back() * (1 + U(rng)), 10 + rng() % 1000};
        } else {
            c.grid = LampertiLogPolicy{U(rng) / 100, c.ladder.back() * 2, 2 + rng() % 5000};
        }
        c.burn_in = rng() % 3;
        c.parameters = {{"gamma", {U(rng)}}, {"alphas", {U(rng), U(rng), U(rng)}}};
        const auto text = emit_config(c);
        CAPTURE(text);
        CHECK(parse_config(text) == c);
        CHECK(emit_config(parse_config(text)) == text);
    }
}

TEST_CASE("config errors carry line and key") {
    const std::string good = emit_config(base_config());
    auto expect = [](const std::string& text, std::size_t line, const std::string& key) {
        try {
            (void)parse_config(text);
            FAIL("accepted: " << text);
        } catch (const ConfigError& e) {
            CHECK(e.line() == line);
            CHECK(e.key() == key);
        }
    };
    // Unknown key on a known line.
    std::size_t lines = 0;
    for (const char ch : good) lines += ch == '\n';
    expect(good + "[estimation]\nwobble = 1\n", lines + 2, "wobble");
    expect(good + "[nonsense]\n", lines + 1, "");
    expect(good + "[parameters]\nx0 = 1, 2\n", lines + 2, "x0");
    expect(good + "[parameters]\nfoo = 1\n", lines + 2, "foo");
    expect(good + "[experiment]\nid = again\n", lines + 2, "id");

    // Missing required key.
    std::string missing;
    std::istringstream is(good);
    for (std::string l; std::getline(is, l);) {
        if (l.rfind("horizons", 0) != 0) missing += l + "\n";
    }
    expect(missing, 0, "horizons");

    std::string bad_number = good;
    bad_number.replace(bad_number.find("level = 1"), 9, "level = x");
    CHECK_THROWS_AS((void)parse_config(bad_number), ConfigError);

    try {
        (void)parse_config(good + "[grid]\nwobble = 2\n");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("config:" + std::to_string(lines + 2) + ": key 'wobble'") == 0);
    }
}

}
