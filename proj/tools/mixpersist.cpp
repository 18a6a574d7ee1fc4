// Command-line front end: sampling, persistence estimation, fits and the experiment registry.
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mixpersist/config.hpp"
#include "mixpersist/io.hpp"
#include "mixpersist/persistence.hpp"
#include "mixpersist/registry.hpp"
#include "mixpersist/rkhs_spectral.hpp"

namespace fs = std::filesystem;
using namespace mixpersist;

namespace {

struct GridOptions {
    std::string policy = "lamperti_log";
    double t_min = 1e-3;
    std::optional<double> t_max;
    std::size_t points = 4096;

    void add(CLI::App* app) {
        app->add_option("--grid", policy, "Grid policy")->check(CLI::IsMember({"uniform", "lamperti_log"}));
        app->add_option("--t-min", t_min, "First time of a lamperti_log grid");
        app->add_option("--t-max", t_max, "Last grid time (defaults to the largest horizon)");
        app->add_option("--points", points, "Number of positive grid times");
    }

    GridPolicy policy_for(double fallback_t_max) const {
        const double tm = t_max.value_or(fallback_t_max);
        if (policy == "uniform") return UniformPolicy{tm, points};
        return LampertiLogPolicy{t_min, tm, points};
    }
};

struct QueryOptions {
    std::string ladder_text = "16,32,64,128,256,512,1024,2048,4096";
    std::size_t paths = 100000;
    double level = 1.0;
    bool no_extrapolate = false;
    std::string experiment = "cli";
    GridOptions grid;

    void add(CLI::App* app) {
        app->add_option("--ladder", ladder_text, "Comma-separated increasing horizons");
        app->add_option("--paths", paths, "Monte Carlo paths");
        app->add_option("--level", level, "Barrier level");
        app->add_flag("--no-extrapolate", no_extrapolate, "Plain grid estimates without the coarse-grid correction");
        app->add_option("--experiment", experiment, "Experiment name hashed into the random stream key");
        grid.add(app);
    }

    std::vector<double> ladder() const {
        std::vector<double> v;
        std::stringstream ss(ladder_text);
        for (std::string item; std::getline(ss, item, ',');) v.push_back(std::stod(item));
        return v;
    }

    PersistenceQuery query(const ProcessSpec& spec, std::uint64_t seed) const {
        PersistenceQuery q;
        q.spec = spec;
        q.level = level;
        q.T_ladder = ladder();
        if (q.T_ladder.empty()) throw std::invalid_argument("--ladder: no horizons");
        q.grid_policy = grid.policy_for(q.T_ladder.back());
        q.n_paths = paths;
        q.seed = SeedPolicy::named(seed, experiment);
        if (!no_extrapolate) q.extrapolation_beta = default_bias_exponent(spec);
        return q;
    }
};

void write_text(const fs::path& file, const std::string& body) {
    auto os = open_output(file);
    os << body;
}

void write_curves(const fs::path& dir, const std::string& stem, const SurvivalCurves& c) {
    std::ostringstream fine;
    write_persistence_csv(fine, c.fine);
    write_text(dir / (stem + ".csv"), fine.str());
    if (c.extrapolating()) {
        std::ostringstream coarse, dense;
        write_persistence_csv(coarse, c.coarse);
        write_persistence_csv(dense, extrapolate_curves(c));
        write_text(dir / (stem + "_coarse.csv"), coarse.str());
        write_text(dir / (stem + "_dense.csv"), dense.str());
    }
}

std::string fit_line(const ExponentFit& f) {
    return "theta_hat=" + format_double(f.theta_hat) + " stderr=" + format_double(f.std_error) +
           " r_squared=" + format_double(f.r_squared);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixpersist: persistence exponents of mixed self-similar Gaussian processes"};
    app.require_subcommand(1);
    app.fallthrough();
    unsigned threads = 0;
    std::uint64_t seed = 20240611;
    std::string out;
    app.add_option("--threads", threads, "Worker threads (0: MIXPERSIST_THREADS or all cores)");

    auto* sim = app.add_subcommand("simulate", "Sample paths to CSV or the binary container");
    std::string spec_text = "brownian()";
    std::string backend = "auto";
    std::string format = "csv";
    std::size_t sim_paths = 10;
    GridOptions sim_grid;
    sim_grid.policy = "uniform";
    sim_grid.points = 1024;
    sim->add_option("--spec", spec_text, "Process descriptor, e.g. fbm(H=0.75)");
    sim->add_option("--paths", sim_paths, "Number of paths");
    sim->add_option("--backend", backend)->check(CLI::IsMember({"auto", "cholesky", "circulant"}));
    sim->add_option("--format", format)->check(CLI::IsMember({"csv", "bin"}));
    sim->add_option("--seed", seed, "Master seed");
    sim->add_option("--out", out, "Output file")->required();
    sim_grid.add(sim);

    auto* per = app.add_subcommand("persistence", "Estimate P(sup X <= level) on a horizon ladder");
    QueryOptions qopt;
    per->add_option("--spec", spec_text, "Process descriptor");
    per->add_option("--seed", seed, "Master seed");
    per->add_option("--out", out, "Output directory")->required();
    qopt.add(per);

    auto* fit = app.add_subcommand("fit", "Fit the persistence exponent to an estimates CSV");
    std::string fit_input, fit_coarse, fit_label = "unknown";
    std::optional<double> fit_beta;
    std::size_t burn_in = 2;
    fit->add_option("--input", fit_input, "Estimates CSV")->required();
    fit->add_option("--coarse", fit_coarse, "Coarse-grid estimates CSV for the extrapolated fit");
    fit->add_option("--beta", fit_beta, "Bias exponent of the coarse-grid correction");
    fit->add_option("--burn-in", burn_in, "Smallest horizons dropped");
    fit->add_option("--label", fit_label, "Spec column of the fit CSV");
    fit->add_option("--out", out, "Fit CSV (stdout when omitted)");

    auto* gap = app.add_subcommand("gap", "Paired exponent gap theta(mixed) - theta(dominant)");
    std::string mixed_text, dominant_text;
    QueryOptions gopt;
    gap->add_option("--mixed", mixed_text, "Mixed process descriptor")->required();
    gap->add_option("--dominant", dominant_text, "Dominant component descriptor")->required();
    gap->add_option("--burn-in", burn_in, "Smallest horizons dropped");
    gap->add_option("--seed", seed, "Master seed");
    gap->add_option("--out", out, "Output directory")->required();
    gopt.add(gap);

    auto* exc = app.add_subcommand("exceedance", "P(|Y_t| > t^gamma for some grid t in [A, T])");
    double gamma = 0.4, A = 10, T = 1000;
    std::size_t exc_paths = 100000;
    GridOptions exc_grid;
    exc->add_option("--spec", spec_text, "Process descriptor");
    exc->add_option("--gamma", gamma);
    exc->add_option("--from", A, "Window start A");
    exc->add_option("--to", T, "Window end T");
    exc->add_option("--paths", exc_paths);
    exc->add_option("--seed", seed, "Master seed");
    exc->add_option("--out", out, "Output CSV (stdout summary only when omitted)");
    exc_grid.add(exc);

    auto* spc = app.add_subcommand("spectral", "Lamperti spectral density and h1 asymptotics as CSV");
    double x_max = 5, alpha = 0.25, x0 = 1, tau_min = 1e3, tau_max = 1e4;
    std::size_t x_points = 101, tau_points = 91;
    spc->add_option("--spec", spec_text, "Self-similar process descriptor");
    spc->add_option("--x-max", x_max);
    spc->add_option("--x-points", x_points);
    spc->add_option("--alpha", alpha);
    spc->add_option("--x0", x0);
    spc->add_option("--tau-min", tau_min);
    spc->add_option("--tau-max", tau_max);
    spc->add_option("--tau-points", tau_points);
    spc->add_option("--out", out, "Output directory")->required();

    auto* run = app.add_subcommand("run", "Run a registry experiment from a config file or an entry's defaults");
    std::string config_path, entry_name;
    std::optional<std::uint64_t> run_seed;
    run->add_option("--config", config_path, "Experiment config file");
    run->add_option("--entry", entry_name, "Registry entry (its default config)");
    run->add_option("--seed", run_seed, "Override master_seed");
    run->add_option("--out", out, "Override output_dir");

    auto* list = app.add_subcommand("list", "List registry entries");
    auto* describe = app.add_subcommand("describe", "Describe a registry entry");
    describe->add_option("name", entry_name, "Entry name")->required();
    describe->add_option("--entry", entry_name, "Entry name");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            const auto spec = parse_spec(spec_text);
            const TimeGrid grid = TimeGrid::from_policy(sim_grid.policy_for(1.0), true);
            const Backend b = backend == "cholesky" ? Backend::Cholesky
                              : backend == "circulant" ? Backend::Circulant
                                                       : Backend::Auto;
            const auto batch = sample_process(spec, grid, sim_paths, SeedPolicy::named(seed, "simulate"), b, {}, threads);
            if (format == "bin") {
                write_paths_binary(fs::path(out), batch);
            } else {
                auto os = open_output(out);
                write_paths_csv(os, batch);
            }
            if (batch.circulant_fallback) std::cerr << "note: circulant embedding failed, sampled by Cholesky\n";
        } else if (*per) {
            const auto spec = parse_spec(spec_text);
            const auto curves = estimate_curves(qopt.query(spec, seed), threads);
            write_curves(out, "estimates", curves);
            try {
                std::cout << spec.descriptor() << ": " << fit_line(fit_curves(curves, burn_in)) << '\n';
            } catch (const std::invalid_argument& e) {
                std::cout << spec.descriptor() << ": no fit (" << e.what() << ")\n";
            }
        } else if (*fit) {
            std::ifstream in(fit_input);
            if (!in) throw std::runtime_error("cannot open " + fit_input);
            const auto fine = read_persistence_csv(in);
            ExponentFit f;
            if (!fit_coarse.empty()) {
                if (!fit_beta) throw std::invalid_argument("fit: --coarse needs --beta");
                std::ifstream cin(fit_coarse);
                if (!cin) throw std::runtime_error("cannot open " + fit_coarse);
                f = fit_exponent_extrapolated(fine, read_persistence_csv(cin), *fit_beta, burn_in);
            } else {
                f = fit_exponent(fine, burn_in);
            }
            std::ostringstream os;
            write_fit_csv(os, {{fit_label, f}});
            if (out.empty()) {
                std::cout << os.str();
            } else {
                write_text(out, os.str());
            }
        } else if (*gap) {
            const auto m = parse_spec(mixed_text);
            const auto d = parse_spec(dominant_text);
            const auto g = paired_exponent_gap(m, d, gopt.query(d, seed), burn_in, threads);
            write_curves(out, "estimates_" + spec_slug(m), g.mixed_curves);
            write_curves(out, "estimates_" + spec_slug(d), g.dominant_curves);
            std::ostringstream os;
            write_fit_csv(os, {{m.descriptor(), g.mixed}, {d.descriptor(), g.dominant}});
            write_text(fs::path(out) / "fits.csv", os.str());
            std::cout << m.descriptor() << ": " << fit_line(g.mixed) << '\n'
                      << d.descriptor() << ": " << fit_line(g.dominant) << '\n'
                      << "gap: " << format_double(g.gap)
                      << (g.common_random_numbers ? " (common random numbers)" : "") << '\n';
        } else if (*exc) {
            const auto spec = parse_spec(spec_text);
            const GridPolicy policy = exc_grid.policy_for(T);
            const auto e = exceedance_probability(spec, gamma, A, T, policy, exc_paths,
                                                  SeedPolicy::named(seed, "exceedance"), threads);
            const double bound = exceedance_union_bound(spec, gamma, A, T, TimeGrid::from_policy(policy, true));
            std::cout << "exceedance: p_hat=" << format_double(e.p_hat) << " ci=[" << format_double(e.ci_low) << ", "
                      << format_double(e.ci_high) << "] union_bound=" << format_double(bound) << '\n';
            if (!out.empty()) {
                std::ostringstream os;
                write_persistence_csv(os, {e});
                write_text(out, os.str());
            }
        } else if (*spc) {
            const auto spec = parse_spec(spec_text);
            std::vector<double> xs(x_points), taus(tau_points);
            for (std::size_t i = 0; i < x_points; ++i) {
                xs[i] = x_points > 1 ? x_max * static_cast<double>(i) / static_cast<double>(x_points - 1) : 0.0;
            }
            for (std::size_t i = 0; i < tau_points; ++i) {
                taus[i] = tau_points > 1 ? tau_min * std::pow(tau_max / tau_min, static_cast<double>(i) /
                                                                                    static_cast<double>(tau_points - 1))
                                         : tau_min;
            }
            std::ostringstream density, h1;
            write_spectral_csv(density, spectral_density(spec, xs));
            write_h1_csv(h1, alpha, x0, taus);
            write_text(fs::path(out) / ("spectral_" + spec_slug(spec) + ".csv"), density.str());
            write_text(fs::path(out) / ("h1_alpha_" + format_double(alpha) + ".csv"), h1.str());
            std::cout << "c0(" << format_double(alpha) << ") = " << format_double(c0_constant(alpha)) << '\n';
        } else if (*run) {
            if (config_path.empty() == entry_name.empty()) {
                std::cerr << "run: give exactly one of --config and --entry\n";
                return 2;
            }
            ExperimentConfig cfg;
            try {
                cfg = config_path.empty() ? find_entry(entry_name).defaults : load_config(config_path);
                if (run_seed) cfg.master_seed = *run_seed;
                if (!out.empty()) cfg.output_dir = out;
                cfg.validate();
            } catch (const ConfigError& e) {
                std::cerr << "error: " << (config_path.empty() ? "" : config_path + ": ") << e.what() << '\n';
                return 2;
            }
            const auto report = run_experiment(cfg, threads, &std::cerr);
            for (const auto& a : report.assertions) {
                std::cout << (a.informational ? "INFO " : (a.passed ? "PASS " : "FAIL ")) << a.name << " = "
                          << format_double(a.value) << (a.lower ? " > " : " <= ") << format_double(a.bound) << '\n';
            }
            std::cout << "summary: " << (fs::path(cfg.output_dir) / "summary.txt").string() << '\n';
            return report.passed ? 0 : 1;
        } else if (*list) {
            for (const auto& e : registry()) std::cout << e.name << '\n';
        } else if (*describe) {
            std::cout << describe_entry(find_entry(entry_name));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
