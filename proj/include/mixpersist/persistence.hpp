#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mixpersist/path_sampler.hpp"
#include "mixpersist/rkhs_spectral.hpp"

namespace mixpersist {

/// Default grid: LampertiLog from 1e-3 to t_max with 4096 points.
[[nodiscard]] GridPolicy default_grid_policy(double t_max);

struct PersistenceQuery {
    ProcessSpec spec = ProcessSpec::brownian();
    double level = 1.0;
    std::vector<double> T_ladder;
    /// Empty optional means default_grid_policy(T_max).
    std::optional<GridPolicy> grid_policy;
    std::size_t n_paths = 100000;
    SeedPolicy seed;
    /// The indicator is sup (X_t + drift_sign * h(t)) <= level.
    std::optional<DriftEnvelope> drift;
    int drift_sign = 1;
    /// When set, estimates are dense-grid extrapolations with this bias exponent.
    std::optional<double> extrapolation_beta;

    void validate() const;
    [[nodiscard]] TimeGrid grid() const;
};

struct PersistenceEstimate {
    double T = 0.0;
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_paths = 0;
    std::size_t grid_points_used = 0;
    /// Standard error of p_hat.
    double se = 0.0;
    /// No surviving path; excluded from fits.
    bool zero_count = false;
    /// p_hat is a dense-grid extrapolation rather than a plain proportion.
    bool extrapolated = false;
};

/// Wilson score interval at 95%.
[[nodiscard]] std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

/// Plain proportion estimate with Wilson interval and binomial SE.
[[nodiscard]] PersistenceEstimate proportion_estimate(double T, std::size_t survivors, std::size_t n,
                                                      std::size_t grid_points);

// ---------------------------------------------------------------------------------------------
// Streaming engine: samples component blocks once and scans any number of barrier observables
// over them, keeping only each path's first exceedance index.

/// One independently sampled Gaussian component on the engine grid.
struct EngineComponent {
    std::shared_ptr<const FactorPlan> plan;
    /// Stream index fed to the counter-based generator.
    std::uint64_t stream = 0;
};

struct Observable {
    std::string name;
    /// (component index, weight); one or two terms.
    std::vector<std::pair<std::size_t, double>> terms;
    /// Barrier per grid time (size = grid.size()); +inf disables a time.
    std::vector<double> limit;
    bool two_sided = false;
};

/// first[o][r] = index of the first grid time where observable o of replicate r crosses its
/// limit, or grid.size() if it never does. Replicates are seed.first_replicate + r.
[[nodiscard]] std::vector<std::vector<std::uint32_t>> run_engine(const TimeGrid& grid,
                                                                 const std::vector<EngineComponent>& components,
                                                                 const std::vector<Observable>& observables,
                                                                 std::size_t n_paths, const SeedPolicy& seed,
                                                                 unsigned threads = 0);

/// Limit vector level - sign * h(t) over a grid (no drift when h is empty).
[[nodiscard]] std::vector<double> barrier_limits(const TimeGrid& grid, double level,
                                                 const std::optional<DriftEnvelope>& drift, int sign);

/// Keeps only grid indices in the coarse subgrid {n-1, n-1-stride, ...} (plus the origin).
[[nodiscard]] std::vector<double> coarsen_limits(std::vector<double> limit, std::size_t stride,
                                                 bool keep_origin = true);

/// Factored components of a spec on a grid, streams 0, 1, ... as in sample_process.
[[nodiscard]] std::vector<EngineComponent> spec_components(const ProcessSpec& spec, const TimeGrid& grid,
                                                           const QuadratureConfig& q = {}, unsigned threads = 0);

/// Survival curve at each T from first-exceedance indices.
[[nodiscard]] std::vector<PersistenceEstimate> survival_estimates(const TimeGrid& grid,
                                                                  const std::vector<std::uint32_t>& first,
                                                                  const std::vector<double>& ladder);

/// Grid refinement ratio used by the extrapolated estimator.
inline constexpr std::size_t kCoarseStride = 4;

/// Dense-grid extrapolation from a fine and a coarse (every kCoarseStride-th point) scan of the
/// same paths. With s = kCoarseStride and bias ~ step^beta, each path contributes
/// (s^beta I_fine - I_coarse) / (s^beta - 1); p_hat is their mean and se their standard error.
[[nodiscard]] std::vector<PersistenceEstimate> extrapolated_estimates(const TimeGrid& grid,
                                                                      const std::vector<std::uint32_t>& fine,
                                                                      const std::vector<std::uint32_t>& coarse,
                                                                      const std::vector<double>& ladder, double beta);

/// Simulates once on the grid for T_max; nested estimates share paths and are monotone.
[[nodiscard]] std::vector<PersistenceEstimate> estimate_persistence(const PersistenceQuery& q, unsigned threads = 0);

/// Bias exponent of grid monitoring: the Hoelder index of the roughest component (1/2 for BM).
[[nodiscard]] double default_bias_exponent(const ProcessSpec& spec);

/// Plain survival curves of one run. `coarse` is filled only when the query extrapolates.
struct SurvivalCurves {
    std::vector<PersistenceEstimate> fine;
    std::vector<PersistenceEstimate> coarse;
    double beta = 0.0;

    [[nodiscard]] bool extrapolating() const { return !coarse.empty(); }
};

[[nodiscard]] SurvivalCurves estimate_curves(const PersistenceQuery& q, unsigned threads = 0);

/// Several queries that differ only in level, drift and drift_sign, scanned over one set of
/// sampled paths.
[[nodiscard]] std::vector<SurvivalCurves> estimate_curves_shared(const std::vector<PersistenceQuery>& queries,
                                                                 unsigned threads = 0);

/// Per-T dense-grid extrapolation of curves with a coarse scan, as in extrapolated_estimates.
[[nodiscard]] std::vector<PersistenceEstimate> extrapolate_curves(const SurvivalCurves& curves);

/// 2 Phi(level / sqrt(T)) - 1 for level > 0, else 0.
[[nodiscard]] double closed_form_bm_persistence(double T, double level);

struct ExponentFit {
    double theta_hat = 0.0;
    double std_error = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double T_min = 0.0;
    double T_max = 0.0;
    std::size_t burn_in = 0;
    std::size_t points_used = 0;
};

/// Weighted least squares of log p on log T with weights p^2/se^2 (delta method), after
/// dropping the burn_in smallest horizons and zero counts. Needs 4 usable points.
[[nodiscard]] ExponentFit fit_exponent(const std::vector<PersistenceEstimate>& estimates, std::size_t burn_in = 2);

/// Exponent fit on the dense-grid extrapolation of log p: with s = kCoarseStride^beta the
/// regressand is log p_fine + (log p_fine - log p_coarse) / (s - 1). Its variance uses the
/// nesting of the two survival events (fine survival implies coarse survival on the same path).
[[nodiscard]] ExponentFit fit_exponent_extrapolated(const std::vector<PersistenceEstimate>& fine,
                                                    const std::vector<PersistenceEstimate>& coarse, double beta,
                                                    std::size_t burn_in = 2);

/// fit_exponent_extrapolated when the curves carry a coarse scan, fit_exponent otherwise.
[[nodiscard]] ExponentFit fit_curves(const SurvivalCurves& curves, std::size_t burn_in = 2);

struct GapResult {
    double gap = 0.0;
    ExponentFit mixed;
    ExponentFit dominant;
    SurvivalCurves mixed_curves;
    SurvivalCurves dominant_curves;
    /// Both fits drew the dominant component from the same stream.
    bool common_random_numbers = false;
};

/// theta(mixed) - theta(dominant) from the ladder, grid, level, n_paths and seed of `shared`.
/// With shared.extrapolation_beta set, each side is extrapolated with its own bias exponent.
/// When the dominant spec is component 0 of an independent mixture, both observables are
/// scanned over the same sampled paths.
[[nodiscard]] GapResult paired_exponent_gap(const ProcessSpec& spec_mixed, const ProcessSpec& spec_dominant,
                                            const PersistenceQuery& shared, std::size_t burn_in = 2,
                                            unsigned threads = 0);

/// P(|Y_t| > t^gamma at some grid time in [A, T]); p_hat is the exceedance probability.
[[nodiscard]] PersistenceEstimate exceedance_probability(const ProcessSpec& specY, double gamma, double A, double T,
                                                         const GridPolicy& grid_policy, std::size_t n_paths,
                                                         const SeedPolicy& seed, unsigned threads = 0);

/// Sum over grid times in [A, T] of P(|N(0, Var Y_t)| > t^gamma).
[[nodiscard]] double exceedance_union_bound(const ProcessSpec& specY, double gamma, double A, double T,
                                            const TimeGrid& grid);

}  // namespace mixpersist
