#include "mixpersist/registry.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <variant>

#include "mixpersist/io.hpp"
#include "mixpersist/parallel.hpp"
#include "mixpersist/persistence.hpp"
#include "mixpersist/rkhs_spectral.hpp"
#include "mixpersist/simd/kernels.hpp"

namespace mixpersist {

namespace {

std::vector<double> desk_ladder() {
    std::vector<double> v;
    for (int k = 4; k <= 12; ++k) v.push_back(std::ldexp(1.0, k));
    return v;
}

ExperimentConfig base_config(const std::string& name, std::vector<ProcessSpec> specs) {
    ExperimentConfig c;
    c.experiment_id = name;
    c.entry = name;
    c.master_seed = 20240611;
    c.n_paths = 100000;
    c.output_dir = "out/" + name;
    c.specs = std::move(specs);
    c.ladder = desk_ladder();
    c.grid = LampertiLogPolicy{1e-3, 4096.0, 4096};
    return c;
}

std::vector<RegistryEntry> build_registry() {
    std::vector<RegistryEntry> r;

    auto bm = base_config("bm-oracle", {ProcessSpec::brownian()});
    bm.ladder = {4, 16, 64, 256, 1024};
    bm.grid = LampertiLogPolicy{1e-3, 1024.0, 4096};
    r.push_back({"bm-oracle",
                 "Reflection principle: P(sup over [0,T] of W <= 1) = 2 Phi(1/sqrt(T)) - 1 for Brownian motion.",
                 "max |p_hat - closed form| <= 3 standard errors over the ladder (dense-grid extrapolated estimates)",
                 bm});

    r.push_back({"corollary-mixed-fbm",
                 "Brownian motion plus an independent FBM(H) has persistence exponent 1 - max(1/2, H): the "
                 "smoother part wins.",
                 "|theta(mixed) - theta(FBM(H))| <= 0.06 with common random numbers; theta(mixed) within 0.08 of "
                 "1 - H and more than 3 standard errors away from the Brownian 1/2",
                 base_config("corollary-mixed-fbm",
                             {ProcessSpec::mixed_independent(1, 0.75, 1, 0.5), ProcessSpec::fbm(0.75)})});

    r.push_back({"corollary-ccmfbm",
                 "Completely correlated mixed FBM (one driving Brownian motion, a b > 0) has the exponent of FBM(H).",
                 "|theta(ccm mixed) - theta(FBM(H))| <= 0.08 (same master seed, no path pairing)",
                 base_config("corollary-ccmfbm",
                             {ProcessSpec::mixed_correlated(1, 0.75, 1, 0.5), ProcessSpec::fbm(0.75)})});

    r.push_back({"corollary-integrated",
                 "Integrated mixed FBM a I^H + b I^K has the exponent of I^H; theta_I(1/2) = 1/4 is known and "
                 "theta_I(H) = H(1-H) is conjectured.",
                 "|theta(a I^H + b I^K) - theta(I^H)| <= 0.08; theta(I^{1/2}) within 0.06 of 1/4; theta(I^H) vs "
                 "H(1-H) reported only",
                 base_config("corollary-integrated",
                             {ProcessSpec::integrated_mixed_independent(1, 0.75, 1, 0.5),
                              ProcessSpec::integrated_fbm(0.75), ProcessSpec::integrated_fbm(0.5)})});

    r.push_back({"corollary-rl",
                 "Riemann-Liouville processes: the Brownian cases give theta_R(1/2) = 1/2 and theta_R(3/2) = 1/4; "
                 "an independent rougher RL part does not change the exponent.",
                 "theta(R^{1/2}) within 0.06 of 1/2; theta(R^{3/2}) within 0.06 of 1/4; |theta(a R^H + b R^K) - "
                 "theta(R^H)| <= 0.08",
                 base_config("corollary-rl",
                             {ProcessSpec::mixed_riemann_liouville(1, 0.8, 1, 0.4), ProcessSpec::riemann_liouville(0.8),
                              ProcessSpec::riemann_liouville(0.5), ProcessSpec::riemann_liouville(1.5)})});

    auto l1 = base_config("lemma1-exceedance", {ProcessSpec::fbm(0.25)});
    l1.ladder = {1000};
    l1.grid = LampertiLogPolicy{1e-3, 1000.0, 4096};
    l1.burn_in = 0;
    l1.parameters = {{"gamma", {0.4}}, {"window_start", {10}}, {"window_end", {1000}}};
    r.push_back({"lemma1-exceedance",
                 "For a self-similar Y with index below gamma, P(|Y_t| > t^gamma for some t in [A, T]) is small once "
                 "A is large (a union-bound argument over the Gaussian tails).",
                 "exceedance probability <= 1e-3 and <= its union bound over grid times", l1});

    auto l2 = base_config("lemma2-asymptotics", {ProcessSpec::fbm(0.75)});
    l2.parameters = {{"alphas", {0.15, 0.25, 0.4}}, {"x0", {1}},          {"tau_min", {1000}},
                     {"tau_max", {10000}},         {"tau_points", {91}},  {"c0_alpha", {0.25}},
                     {"drift_alpha", {0.25}},      {"drift_c", {0}},      {"drift_check", {1}},
                     {"gamma", {0.5}}};
    r.push_back({"lemma2-asymptotics",
                 "A drift h(t) = c t^H (log t)^{alpha-1} lies in the RKHS of FBM; the spectral construction needs "
                 "2 tau^{alpha-1} times the integral over (0, tau x0) of y^{-alpha} cos y to approach c0 tau^{alpha-1}, "
                 "and shifting FBM by +-h leaves the persistence exponent unchanged.",
                 "h1(tau) tau^{1-alpha} / c0 within 2% of 1 on [1e3, 1e4]; c0(1/4) = 2 Gamma(3/4) sin(pi/8) to "
                 "1e-6; drifted and undrifted FBM exponents within 0.08",
                 l2});
    return r;
}

std::string grid_text(const GridPolicy& g) {
    if (const auto* l = std::get_if<LampertiLogPolicy>(&g)) {
        return "lamperti_log(t_min=" + format_double(l->t_min) + ",t_max=" + format_double(l->t_max) +
               ",points=" + std::to_string(l->n) + ")";
    }
    if (const auto* u = std::get_if<UniformPolicy>(&g)) {
        return "uniform(t_max=" + format_double(u->t_max) + ",points=" + std::to_string(u->n) + ")";
    }
    return "explicit";
}

std::string fit_text(const ExponentFit& f) {
    return "theta_hat=" + format_double(f.theta_hat) + " stderr=" + format_double(f.std_error) +
           " r_squared=" + format_double(f.r_squared) + " T_min=" + format_double(f.T_min) +
           " T_max=" + format_double(f.T_max) + " burn_in=" + std::to_string(f.burn_in);
}

class Run {
public:
    Run(const ExperimentConfig& c, unsigned threads, std::ostream* log)
        : c_(c), threads_(threads), log_(log), seed_(SeedPolicy::named(c.master_seed, c.experiment_id)) {}

    void line(const std::string& key, const std::string& value) { summary_.push_back(key + ": " + value); }

    void progress(const std::string& msg) {
        if (log_ != nullptr) *log_ << "[" << c_.entry << "] " << msg << std::endl;
    }

    void file(const std::string& name, std::string body) { files_.emplace_back(name, std::move(body)); }

    void check(const std::string& name, double value, double bound, bool lower = false, bool informational = false) {
        Assertion a{name, value, bound, lower, lower ? value > bound : value <= bound, informational};
        if (!a.passed && !a.informational) failed_ = true;
        assertions_.push_back(a);
    }

    double param(const std::string& key, double fallback) const {
        const auto it = c_.parameters.find(key);
        return it == c_.parameters.end() ? fallback : it->second.front();
    }

    std::vector<double> params(const std::string& key, std::vector<double> fallback) const {
        const auto it = c_.parameters.find(key);
        return it == c_.parameters.end() ? fallback : it->second;
    }

    const ProcessSpec& spec(std::size_t i) const {
        if (i >= c_.specs.size()) {
            throw std::invalid_argument(c_.entry + ": needs at least " + std::to_string(i + 1) + " process specs");
        }
        return c_.specs[i];
    }

    PersistenceQuery query(const ProcessSpec& spec) const {
        PersistenceQuery q;
        q.spec = spec;
        q.level = c_.level;
        q.T_ladder = c_.ladder;
        q.grid_policy = c_.grid;
        q.n_paths = c_.n_paths;
        q.seed = seed_;
        if (c_.extrapolate) q.extrapolation_beta = default_bias_exponent(spec);
        return q;
    }

    void write_curves(const ProcessSpec& spec, const SurvivalCurves& curves) {
        std::ostringstream os;
        write_persistence_csv(os, curves.fine);
        file("estimates_" + spec_slug(spec) + ".csv", os.str());
        if (curves.extrapolating()) {
            std::ostringstream dense;
            write_persistence_csv(dense, extrapolate_curves(curves));
            file("estimates_" + spec_slug(spec) + "_dense.csv", dense.str());
        }
    }

    ExponentFit fit(const ProcessSpec& spec, const SurvivalCurves& curves) {
        const ExponentFit f = fit_curves(curves, c_.burn_in);
        fits_.push_back({spec.descriptor(), f});
        line("fit[" + spec.descriptor() + "]", fit_text(f));
        return f;
    }

    ExponentFit single(const ProcessSpec& spec) {
        progress("persistence " + spec.descriptor());
        const auto curves = estimate_curves(query(spec), threads_);
        write_curves(spec, curves);
        return fit(spec, curves);
    }

    GapResult gap(const ProcessSpec& mixed, const ProcessSpec& dominant) {
        progress("paired gap " + mixed.descriptor() + " vs " + dominant.descriptor());
        PersistenceQuery shared = query(dominant);
        const auto g = paired_exponent_gap(mixed, dominant, shared, c_.burn_in, threads_);
        write_curves(mixed, g.mixed_curves);
        write_curves(dominant, g.dominant_curves);
        fits_.push_back({mixed.descriptor(), g.mixed});
        fits_.push_back({dominant.descriptor(), g.dominant});
        line("fit[" + mixed.descriptor() + "]", fit_text(g.mixed));
        line("fit[" + dominant.descriptor() + "]", fit_text(g.dominant));
        line("gap", format_double(g.gap));
        line("common_random_numbers", g.common_random_numbers ? "true" : "false");
        return g;
    }

    ExperimentReport finish(double seconds) {
        if (!fits_.empty()) {
            std::ostringstream os;
            write_fit_csv(os, fits_);
            file("fits.csv", os.str());
        }
        const bool passed = !c_.assertions || !failed_;
        std::ostringstream s;
        s << "entry: " << c_.entry << '\n'
          << "experiment_id: " << c_.experiment_id << '\n'
          << "master_seed: " << c_.master_seed << '\n'
          << "n_paths: " << c_.n_paths << '\n'
          << "grid: " << grid_text(c_.grid) << '\n'
          << "ladder:";
        for (std::size_t i = 0; i < c_.ladder.size(); ++i) s << (i ? ", " : " ") << format_double(c_.ladder[i]);
        s << '\n' << "level: " << format_double(c_.level) << '\n'
          << "extrapolate: " << (c_.extrapolate ? "true" : "false") << '\n';
        for (const auto& l : summary_) s << l << '\n';
        for (const auto& a : assertions_) {
            s << "assert " << a.name << (a.lower ? " > " : " <= ") << format_double(a.bound)
              << ": value=" << format_double(a.value) << ' '
              << (a.informational ? (a.passed ? "INFO-PASS" : "INFO-FAIL") : (a.passed ? "PASS" : "FAIL")) << '\n';
        }
        s << "assertions_enforced: " << (c_.assertions ? "true" : "false") << '\n'
          << "result: " << (passed ? "PASS" : "FAIL") << '\n';
        file("summary.txt", s.str());
        file("config.ini", emit_config(c_));

        ExperimentReport report;
        report.entry = c_.entry;
        report.assertions = assertions_;
        report.passed = passed;
        report.seconds = seconds;

        nlohmann::json meta;
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        meta["finished_utc"] = stamp;
        meta["wall_seconds"] = seconds;
        meta["entry"] = c_.entry;
        meta["experiment_id"] = c_.experiment_id;
        meta["threads"] = resolve_threads(threads_);
        meta["simd"] = simd::isa_name(simd::active_isa());
        meta["result"] = passed ? "PASS" : "FAIL";
        std::vector<std::string> names;
        for (const auto& f : files_) names.push_back(f.first);
        meta["files"] = names;
        file("metadata.json", meta.dump(2) + "\n");

        const std::filesystem::path dir(c_.output_dir);
        for (const auto& [name, body] : files_) {
            auto os = open_output(dir / name);
            os << body;
            report.files.push_back(dir / name);
        }
        return report;
    }

    const ExperimentConfig& config() const { return c_; }
    unsigned threads() const { return threads_; }
    const SeedPolicy& seed() const { return seed_; }

private:
    const ExperimentConfig& c_;
    unsigned threads_;
    std::ostream* log_;
    SeedPolicy seed_;
    std::vector<std::string> summary_;
    std::vector<std::pair<std::string, std::string>> files_;
    std::vector<FitRow> fits_;
    std::vector<Assertion> assertions_;
    bool failed_ = false;
};

void run_bm_oracle(Run& run) {
    const auto& spec = run.spec(0);
    if (!std::holds_alternative<BrownianMotion>(spec.variant())) {
        throw std::invalid_argument("bm-oracle: the closed form only holds for brownian()");
    }
    run.progress("persistence " + spec.descriptor());
    const auto curves = estimate_curves(run.query(spec), run.threads());
    run.write_curves(spec, curves);
    const auto est = curves.extrapolating() ? extrapolate_curves(curves) : curves.fine;
    double worst = 0.0;
    for (const auto& e : est) {
        const double exact = closed_form_bm_persistence(e.T, run.config().level);
        const double z = std::abs(e.p_hat - exact) / e.se;
        worst = std::max(worst, z);
        run.line("oracle[T=" + format_double(e.T) + "]", "p_hat=" + format_double(e.p_hat) + " closed_form=" +
                                                              format_double(exact) + " se=" + format_double(e.se) +
                                                              " deviation_se=" + format_double(z));
    }
    run.line("max_deviation_se", format_double(worst));
    if (est.size() >= 4 + run.config().burn_in) run.fit(spec, curves);
    run.check("max_deviation_se", worst, 3.0);
}

double dominant_fbm_exponent(const ProcessSpec& s) { return 1.0 - std::max(0.5, s.dominant_index()); }

void run_mixed_fbm(Run& run) {
    const auto g = run.gap(run.spec(0), run.spec(1));
    run.check("abs_gap", std::abs(g.gap), 0.06);
    const double target = dominant_fbm_exponent(run.spec(0));
    run.line("theta_target", format_double(target));
    run.check("abs_theta_mixed_minus_target", std::abs(g.mixed.theta_hat - target), 0.08);
    run.check("brownian_separation_stderr", std::abs(g.mixed.theta_hat - 0.5) / g.mixed.std_error, 3.0, true);
}

void run_ccm(Run& run) {
    const auto g = run.gap(run.spec(0), run.spec(1));
    run.check("abs_gap", std::abs(g.gap), 0.08);
}

void run_integrated(Run& run) {
    const auto g = run.gap(run.spec(0), run.spec(1));
    run.check("abs_gap", std::abs(g.gap), 0.08);
    auto conjecture = [&](const ProcessSpec& s, const ExponentFit& f) {
        const double H = s.dominant_index() - 1.0;
        const double target = H * (1.0 - H);
        const bool known = H == 0.5;
        run.check("abs_theta_minus_H(1-H)[" + s.descriptor() + "]", std::abs(f.theta_hat - target), known ? 0.06 : 0.08,
                  false, !known);
    };
    if (std::holds_alternative<IntegratedFBM>(run.spec(1).variant())) conjecture(run.spec(1), g.dominant);
    for (std::size_t i = 2; i < run.config().specs.size(); ++i) {
        const auto& s = run.spec(i);
        const auto f = run.single(s);
        if (std::holds_alternative<IntegratedFBM>(s.variant())) conjecture(s, f);
    }
}

void run_rl(Run& run) {
    const auto g = run.gap(run.spec(0), run.spec(1));
    run.check("abs_gap", std::abs(g.gap), 0.08);
    for (std::size_t i = 2; i < run.config().specs.size(); ++i) {
        const auto& s = run.spec(i);
        const auto f = run.single(s);
        const double H = s.dominant_index();
        if (std::holds_alternative<RiemannLiouville>(s.variant()) && (H == 0.5 || H == 1.5)) {
            // R^{1/2} is Brownian motion and R^{3/2} is integrated Brownian motion.
            const double target = H == 0.5 ? 0.5 : 0.25;
            run.check("abs_theta_minus_" + format_double(target) + "[" + s.descriptor() + "]",
                      std::abs(f.theta_hat - target), 0.06);
        }
    }
}

void run_lemma1(Run& run) {
    const auto& spec = run.spec(0);
    const double gamma = run.param("gamma", 0.4);
    const double A = run.param("window_start", 10.0);
    const double T = run.param("window_end", 1000.0);
    run.progress("exceedance " + spec.descriptor());
    const auto e = exceedance_probability(spec, gamma, A, T, run.config().grid, run.config().n_paths, run.seed(),
                                          run.threads());
    const double bound = exceedance_union_bound(spec, gamma, A, T, TimeGrid::from_policy(run.config().grid, true));
    std::ostringstream os;
    os << "spec,gamma,A,T,p_hat,ci_low,ci_high,n_paths,grid_points_used,union_bound\n"
       << '"' << spec.descriptor() << "\"," << format_double(gamma) << ',' << format_double(A) << ','
       << format_double(T) << ',' << format_double(e.p_hat) << ',' << format_double(e.ci_low) << ','
       << format_double(e.ci_high) << ',' << e.n_paths << ',' << e.grid_points_used << ',' << format_double(bound)
       << '\n';
    run.file("exceedance.csv", os.str());
    run.line("exceedance", "p_hat=" + format_double(e.p_hat) + " ci_low=" + format_double(e.ci_low) +
                               " ci_high=" + format_double(e.ci_high) + " grid_points=" +
                               std::to_string(e.grid_points_used));
    run.line("union_bound", format_double(bound));
    run.check("exceedance_probability", e.p_hat, 1e-3);
    run.check("exceedance_minus_union_bound", e.p_hat - bound, 0.0);
}

void run_lemma2(Run& run) {
    const auto alphas = run.params("alphas", {0.15, 0.25, 0.4});
    const double x0 = run.param("x0", 1.0);
    const double tau_min = run.param("tau_min", 1e3);
    const double tau_max = run.param("tau_max", 1e4);
    const auto points = static_cast<std::size_t>(std::max(2.0, run.param("tau_points", 91)));
    std::vector<double> taus(points);
    for (std::size_t i = 0; i < points; ++i) {
        taus[i] = tau_min * std::pow(tau_max / tau_min, static_cast<double>(i) / static_cast<double>(points - 1));
    }
    for (const double alpha : alphas) {
        run.progress("h1 asymptotics alpha=" + format_double(alpha));
        const double c0 = c0_constant(alpha);
        double worst = 0.0;
        for (const double tau : taus) {
            worst = std::max(worst, std::abs(h1_tilde(alpha, x0, tau) * std::pow(tau, 1.0 - alpha) / c0 - 1.0));
        }
        std::ostringstream os;
        write_h1_csv(os, alpha, x0, taus);
        run.file("h1_alpha_" + format_double(alpha) + ".csv", os.str());
        run.line("c0[alpha=" + format_double(alpha) + "]", format_double(c0));
        run.check("max_rel_deviation[alpha=" + format_double(alpha) + "]", worst, 0.02);
    }
    const double a = run.param("c0_alpha", 0.25);
    const double closed = 2.0 * std::tgamma(1.0 - a) * std::sin(std::numbers::pi * a / 2.0);
    run.check("abs_c0_minus_closed_form[alpha=" + format_double(a) + "]", std::abs(c0_constant(a) - closed), 1e-6);

    const auto& spec = run.spec(0);
    if (spec.is_self_similar()) {
        run.progress("spectral density " + spec.descriptor());
        std::vector<double> xs;
        for (int i = 0; i <= 100; ++i) xs.push_back(0.05 * i);
        std::ostringstream os;
        write_spectral_csv(os, spectral_density(spec, xs));
        run.file("spectral_" + spec_slug(spec) + ".csv", os.str());
    }

    if (run.param("drift_check", 1.0) != 0.0) {
        const auto* fbm = std::get_if<FractionalBM>(&spec.variant());
        if (fbm == nullptr) throw std::invalid_argument("lemma2-asymptotics: the drift check needs an fbm spec");
        const auto env = build_drift(fbm->H, run.param("drift_alpha", 0.25), run.param("gamma", fbm->H.value() / 2),
                                     run.param("drift_c", 0.0));
        run.line("drift", "c=" + format_double(env.c) + " t_floor=" + format_double(env.t_floor) +
                              " alpha=" + format_double(env.alpha) + " crossover=" + format_double(env.crossover));
        std::vector<PersistenceQuery> qs(3, run.query(spec));
        qs[1].drift = env;
        qs[1].drift_sign = 1;
        qs[2].drift = env;
        qs[2].drift_sign = -1;
        run.progress("drift-shifted persistence " + spec.descriptor());
        const auto curves = estimate_curves_shared(qs, run.threads());
        const char* labels[] = {"none", "plus_h", "minus_h"};
        std::vector<ExponentFit> fits;
        for (std::size_t i = 0; i < 3; ++i) {
            std::ostringstream os;
            write_persistence_csv(os, curves[i].fine);
            run.file("estimates_drift_" + std::string(labels[i]) + ".csv", os.str());
            fits.push_back(fit_curves(curves[i], run.config().burn_in));
            run.line("fit_drift[" + std::string(labels[i]) + "]", fit_text(fits.back()));
        }
        run.check("abs_theta_plus_h_minus_theta", std::abs(fits[1].theta_hat - fits[0].theta_hat), 0.08);
        run.check("abs_theta_minus_h_minus_theta", std::abs(fits[2].theta_hat - fits[0].theta_hat), 0.08);
    }
}

}  // namespace

const std::vector<RegistryEntry>& registry() {
    static const std::vector<RegistryEntry> r = build_registry();
    return r;
}

std::vector<std::string> registry_names() {
    // Kept literal so config validation never depends on building the registry.
    return {"bm-oracle",   "corollary-mixed-fbm", "corollary-ccmfbm",  "corollary-integrated",
            "corollary-rl", "lemma1-exceedance",  "lemma2-asymptotics"};
}

const RegistryEntry& find_entry(std::string_view name) {
    for (const auto& e : registry()) {
        if (e.name == name) return e;
    }
    throw std::invalid_argument("unknown registry entry '" + std::string(name) + "'");
}

std::string describe_entry(const RegistryEntry& entry) {
    std::ostringstream os;
    os << entry.name << "\n  anchor:   " << entry.anchor << "\n  expected: " << entry.expected << "\n  specs:   ";
    for (const auto& s : entry.defaults.specs) os << ' ' << s.descriptor();
    os << "\n  default config:\n";
    std::istringstream cfg(emit_config(entry.defaults));
    for (std::string l; std::getline(cfg, l);) os << (l.empty() ? "" : "    ") << l << '\n';
    return os.str();
}

std::string spec_slug(const ProcessSpec& spec) {
    std::string out;
    for (const char ch : spec.descriptor()) {
        const bool keep = (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') || ch == '.';
        if (keep) {
            out += ch;
        } else if (ch >= 'A' && ch <= 'Z') {
            out += static_cast<char>(ch - 'A' + 'a');
        } else if (!out.empty() && out.back() != '_') {
            out += '_';
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config, unsigned threads, std::ostream* log) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    Run run(config, threads, log);
    const std::string& e = config.entry;
    try {
        if (e == "bm-oracle") {
            run_bm_oracle(run);
        } else if (e == "corollary-mixed-fbm") {
            run_mixed_fbm(run);
        } else if (e == "corollary-ccmfbm") {
            run_ccm(run);
        } else if (e == "corollary-integrated") {
            run_integrated(run);
        } else if (e == "corollary-rl") {
            run_rl(run);
        } else if (e == "lemma1-exceedance") {
            run_lemma1(run);
        } else {
            run_lemma2(run);
        }
    } catch (const PsdFailure& f) {
        throw std::runtime_error(e + ": cov-kernels: " + f.what() +
                                 " (most negative eigenvalue " + format_double(f.most_negative_eigenvalue()) + ")");
    } catch (const NumericalFailure& f) {
        const char* module = e == "lemma2-asymptotics" ? "rkhs-spectral" : "cov-kernels";
        throw std::runtime_error(e + ": " + module + ": " + f.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run.finish(seconds);
}

}  // namespace mixpersist
