#include "mixpersist/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>

#include "mixpersist/parallel.hpp"

namespace mixpersist {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t padded(std::size_t count) {
    return (count + simd::kColumnQuantum - 1) / simd::kColumnQuantum * simd::kColumnQuantum;
}

// survivors[k] = #{r : first[r] >= k} for k = 0..n.
std::vector<std::size_t> survivor_counts(const std::vector<std::uint32_t>& first, std::size_t n) {
    std::vector<std::size_t> hist(n + 2, 0);
    for (const auto f : first) ++hist[std::min<std::size_t>(f, n)];
    std::vector<std::size_t> surv(n + 1, 0);
    std::size_t acc = 0;
    for (std::size_t k = n + 1; k-- > 0;) {
        acc += hist[k];
        if (k <= n) surv[k] = acc;
    }
    return surv;
}

std::vector<Observable> query_observables(const PersistenceQuery& q, const TimeGrid& grid,
                                          const std::vector<std::pair<std::size_t, double>>& terms) {
    std::vector<Observable> obs;
    auto limit = barrier_limits(grid, q.level, q.drift, q.drift_sign);
    if (q.extrapolation_beta) {
        obs.push_back({"coarse", terms, coarsen_limits(limit, kCoarseStride), false});
    }
    obs.insert(obs.begin(), Observable{"fine", terms, std::move(limit), false});
    return obs;
}

std::vector<PersistenceEstimate> estimates_from(const PersistenceQuery& q, const TimeGrid& grid,
                                                const std::vector<std::vector<std::uint32_t>>& first,
                                                std::size_t offset) {
    if (q.extrapolation_beta) {
        return extrapolated_estimates(grid, first[offset], first[offset + 1], q.T_ladder, *q.extrapolation_beta);
    }
    return survival_estimates(grid, first[offset], q.T_ladder);
}

SurvivalCurves curves_from(const PersistenceQuery& q, const TimeGrid& grid,
                           const std::vector<std::vector<std::uint32_t>>& first, std::size_t offset) {
    SurvivalCurves out;
    out.fine = survival_estimates(grid, first[offset], q.T_ladder);
    if (q.extrapolation_beta) {
        out.coarse = survival_estimates(grid, first[offset + 1], q.T_ladder);
        out.beta = *q.extrapolation_beta;
    }
    return out;
}

std::vector<std::pair<std::size_t, double>> all_terms(const ProcessSpec& spec) {
    std::vector<std::pair<std::size_t, double>> terms;
    const auto parts = spec.independent_components();
    for (std::size_t c = 0; c < parts.size(); ++c) terms.emplace_back(c, parts[c].weight);
    return terms;
}

}  // namespace

GridPolicy default_grid_policy(double t_max) { return LampertiLogPolicy{1e-3, t_max, 4096}; }

void PersistenceQuery::validate() const {
    spec.validate();
    if (T_ladder.empty()) throw std::invalid_argument("persistence query: empty T ladder");
    for (std::size_t i = 0; i < T_ladder.size(); ++i) {
        if (!(T_ladder[i] > 0.0) || (i > 0 && !(T_ladder[i] > T_ladder[i - 1]))) {
            throw std::invalid_argument("persistence query: T ladder must be positive and increasing");
        }
    }
    if (n_paths < 100) throw std::invalid_argument("persistence query: n_paths must be at least 100");
    if (!std::isfinite(level)) throw std::invalid_argument("persistence query: level must be finite");
    if (drift_sign != 1 && drift_sign != -1) throw std::invalid_argument("persistence query: drift_sign must be +-1");
    if (extrapolation_beta && !(*extrapolation_beta > 0.0)) {
        throw std::invalid_argument("persistence query: extrapolation beta must be positive");
    }
}

TimeGrid PersistenceQuery::grid() const {
    const GridPolicy policy = grid_policy.value_or(default_grid_policy(T_ladder.back()));
    return TimeGrid::from_policy(policy, true);
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double z) {
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    double lo = std::max(0.0, centre - half);
    double hi = std::min(1.0, centre + half);
    if (successes == 0) lo = 0.0;
    if (successes == n) hi = 1.0;
    return {std::min(lo, p), std::max(hi, p)};
}

PersistenceEstimate proportion_estimate(double T, std::size_t survivors, std::size_t n, std::size_t grid_points) {
    PersistenceEstimate e;
    e.T = T;
    e.n_paths = n;
    e.grid_points_used = grid_points;
    e.p_hat = n == 0 ? 0.0 : static_cast<double>(survivors) / static_cast<double>(n);
    std::tie(e.ci_low, e.ci_high) = wilson_interval(survivors, n);
    e.se = n == 0 ? 0.0 : std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(n));
    e.zero_count = survivors == 0;
    return e;
}

std::vector<double> barrier_limits(const TimeGrid& grid, double level, const std::optional<DriftEnvelope>& drift,
                                   int sign) {
    std::vector<double> limit(grid.size(), level);
    if (drift) {
        for (std::size_t i = 0; i < grid.size(); ++i) limit[i] = level - sign * (*drift)(grid[i]);
    }
    return limit;
}

std::vector<double> coarsen_limits(std::vector<double> limit, std::size_t stride, bool keep_origin) {
    const std::size_t n = limit.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0 && keep_origin) continue;
        if ((n - 1 - i) % stride != 0) limit[i] = kInf;
    }
    return limit;
}

std::vector<EngineComponent> spec_components(const ProcessSpec& spec, const TimeGrid& grid, const QuadratureConfig& q,
                                             unsigned threads) {
    std::vector<EngineComponent> out;
    const auto parts = spec.independent_components();
    for (std::size_t c = 0; c < parts.size(); ++c) {
        const auto cov = cov_matrix(ProcessSpec(parts[c].process), grid, q, threads);
        out.push_back({std::make_shared<const FactorPlan>(FactorPlan::from(cov)), c});
    }
    return out;
}

std::vector<std::vector<std::uint32_t>> run_engine(const TimeGrid& grid, const std::vector<EngineComponent>& components,
                                                   const std::vector<Observable>& observables, std::size_t n_paths,
                                                   const SeedPolicy& seed, unsigned threads) {
    const std::size_t n = grid.size();
    const std::size_t p0 = grid.first_positive();
    const auto sentinel = static_cast<std::uint32_t>(n);
    for (const auto& c : components) {
        if (!c.plan || c.plan->grid != grid) throw std::invalid_argument("run_engine: component grid mismatch");
    }
    for (const auto& o : observables) {
        if (o.limit.size() != n) throw std::invalid_argument("run_engine: limit size must match the grid");
        if (o.terms.empty() || o.terms.size() > 2) throw std::invalid_argument("run_engine: one or two terms");
        for (const auto& t : o.terms) {
            if (t.first >= components.size()) throw std::invalid_argument("run_engine: bad component index");
        }
    }
    std::vector<std::vector<std::uint32_t>> first(observables.size(), std::vector<std::uint32_t>(n_paths, sentinel));
    if (n_paths == 0) return first;

    const simd::Isa isa = simd::active_isa();
    const std::size_t blocks = (n_paths + kBlockPaths - 1) / kBlockPaths;
    parallel_for(blocks, threads, [&](std::size_t b) {
        const std::size_t begin = b * kBlockPaths;
        const std::size_t count = std::min(kBlockPaths, n_paths - begin);
        const std::size_t ld = padded(count);
        std::vector<double> Z;
        std::vector<std::vector<double>> X(components.size());
        for (std::size_t c = 0; c < components.size(); ++c) {
            sample_block(*components[c].plan, seed, components[c].stream, seed.first_replicate + begin, count, ld, Z,
                         X[c], isa);
        }
        std::vector<std::uint32_t> buf(ld);
        for (std::size_t o = 0; o < observables.size(); ++o) {
            const auto& obs = observables[o];
            std::fill(buf.begin(), buf.end(), sentinel);
            if (p0 == 1 && 0.0 > obs.limit[0]) std::fill(buf.begin(), buf.end(), 0u);
            simd::ScanInput in;
            in.x0 = X[obs.terms[0].first].data();
            in.w0 = obs.terms[0].second;
            if (obs.terms.size() == 2) {
                in.x1 = X[obs.terms[1].first].data();
                in.w1 = obs.terms[1].second;
            }
            simd::first_exceedance(isa, in, obs.limit.data() + p0, n - p0, ld, ld, obs.two_sided,
                                   static_cast<std::uint32_t>(p0), buf.data());
            std::copy_n(buf.begin(), count, first[o].begin() + static_cast<std::ptrdiff_t>(begin));
        }
    });
    return first;
}

std::vector<PersistenceEstimate> survival_estimates(const TimeGrid& grid, const std::vector<std::uint32_t>& first,
                                                    const std::vector<double>& ladder) {
    const std::size_t n = grid.size();
    const auto surv = survivor_counts(first, n);
    std::vector<PersistenceEstimate> out;
    for (const double T : ladder) {
        const std::size_t k = grid.count_up_to(T);
        out.push_back(proportion_estimate(T, surv[k], first.size(), k));
    }
    return out;
}

namespace {

PersistenceEstimate extrapolated_point(double T, std::size_t fine_survivors, std::size_t coarse_survivors,
                                       std::size_t n, std::size_t grid_points, double beta) {
    const double w = 1.0 / (std::pow(static_cast<double>(kCoarseStride), beta) - 1.0);
    const double N = static_cast<double>(n);
    // Per path: 1 if the fine scan survives, -w if only the coarse one does, else 0.
    const double nf = static_cast<double>(fine_survivors);
    const double nc_only = static_cast<double>(coarse_survivors) - nf;
    PersistenceEstimate e;
    e.T = T;
    e.n_paths = n;
    e.grid_points_used = grid_points;
    e.extrapolated = true;
    e.p_hat = (nf - w * nc_only) / N;
    const double m2 = (nf + w * w * nc_only) / N;
    e.se = N > 1.0 ? std::sqrt(std::max(0.0, m2 - e.p_hat * e.p_hat) / (N - 1.0)) : 0.0;
    e.ci_low = e.p_hat - 1.959963984540054 * e.se;
    e.ci_high = e.p_hat + 1.959963984540054 * e.se;
    e.zero_count = !(e.p_hat > 0.0);
    return e;
}

}  // namespace

std::vector<PersistenceEstimate> extrapolated_estimates(const TimeGrid& grid, const std::vector<std::uint32_t>& fine,
                                                        const std::vector<std::uint32_t>& coarse,
                                                        const std::vector<double>& ladder, double beta) {
    if (fine.size() != coarse.size()) throw std::invalid_argument("extrapolated_estimates: size mismatch");
    const std::size_t n = grid.size();
    const auto sf = survivor_counts(fine, n);
    const auto sc = survivor_counts(coarse, n);
    std::vector<PersistenceEstimate> out;
    for (const double T : ladder) {
        const std::size_t k = grid.count_up_to(T);
        out.push_back(extrapolated_point(T, sf[k], sc[k], fine.size(), k, beta));
    }
    return out;
}

std::vector<PersistenceEstimate> extrapolate_curves(const SurvivalCurves& curves) {
    if (!curves.extrapolating()) throw std::invalid_argument("extrapolate_curves: no coarse scan");
    if (curves.fine.size() != curves.coarse.size()) throw std::invalid_argument("extrapolate_curves: size mismatch");
    std::vector<PersistenceEstimate> out;
    for (std::size_t i = 0; i < curves.fine.size(); ++i) {
        const auto& f = curves.fine[i];
        const auto& c = curves.coarse[i];
        const double N = static_cast<double>(f.n_paths);
        const auto nf = static_cast<std::size_t>(std::llround(f.p_hat * N));
        const auto nc = static_cast<std::size_t>(std::llround(c.p_hat * N));
        out.push_back(extrapolated_point(f.T, nf, nc, f.n_paths, f.grid_points_used, curves.beta));
    }
    return out;
}

std::vector<PersistenceEstimate> estimate_persistence(const PersistenceQuery& q, unsigned threads) {
    q.validate();
    const TimeGrid grid = q.grid();
    const auto components = spec_components(q.spec, grid, {}, threads);
    const auto obs = query_observables(q, grid, all_terms(q.spec));
    const auto first = run_engine(grid, components, obs, q.n_paths, q.seed, threads);
    return estimates_from(q, grid, first, 0);
}

std::vector<SurvivalCurves> estimate_curves_shared(const std::vector<PersistenceQuery>& queries, unsigned threads) {
    if (queries.empty()) return {};
    const auto& q0 = queries.front();
    for (const auto& q : queries) {
        q.validate();
        if (!(q.spec == q0.spec) || q.T_ladder != q0.T_ladder || q.grid_policy != q0.grid_policy ||
            q.n_paths != q0.n_paths || !(q.seed == q0.seed) || q.extrapolation_beta != q0.extrapolation_beta) {
            throw std::invalid_argument("estimate_curves_shared: queries must share spec, ladder, grid, paths and seed");
        }
    }
    const TimeGrid grid = q0.grid();
    const auto components = spec_components(q0.spec, grid, {}, threads);
    std::vector<Observable> obs;
    std::vector<std::size_t> offsets;
    for (const auto& q : queries) {
        offsets.push_back(obs.size());
        for (auto o : query_observables(q, grid, all_terms(q.spec))) obs.push_back(std::move(o));
    }
    const auto first = run_engine(grid, components, obs, q0.n_paths, q0.seed, threads);
    std::vector<SurvivalCurves> out;
    for (std::size_t i = 0; i < queries.size(); ++i) out.push_back(curves_from(queries[i], grid, first, offsets[i]));
    return out;
}

double default_bias_exponent(const ProcessSpec& spec) { return spec.secondary_index(); }

SurvivalCurves estimate_curves(const PersistenceQuery& q, unsigned threads) {
    q.validate();
    const TimeGrid grid = q.grid();
    const auto components = spec_components(q.spec, grid, {}, threads);
    const auto obs = query_observables(q, grid, all_terms(q.spec));
    const auto first = run_engine(grid, components, obs, q.n_paths, q.seed, threads);
    return curves_from(q, grid, first, 0);
}

double closed_form_bm_persistence(double T, double level) {
    if (!(T > 0.0)) throw std::domain_error("closed_form_bm_persistence: T must be positive");
    if (!(level > 0.0)) return 0.0;
    return std::clamp(std::erf(level / std::sqrt(2.0 * T)), 0.0, 1.0);
}

namespace {

ExponentFit weighted_log_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w,
                             std::size_t burn_in, const char* who) {
    if (x.size() < 4) {
        throw std::invalid_argument(std::string(who) + ": need at least 4 usable ladder points after burn-in, have " +
                                    std::to_string(x.size()));
    }
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double xm = sx / sw;
    const double ym = sy / sw;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - xm) * (x[i] - xm);
        sxy += w[i] * (x[i] - xm) * (y[i] - ym);
        syy += w[i] * (y[i] - ym) * (y[i] - ym);
    }
    ExponentFit fit;
    const double slope = sxy / sxx;
    fit.theta_hat = -slope;
    fit.intercept = ym - slope * xm;
    fit.std_error = std::sqrt(1.0 / sxx);
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + slope * x[i]);
        sse += w[i] * r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    fit.T_min = std::exp(x.front());
    fit.T_max = std::exp(x.back());
    fit.burn_in = burn_in;
    fit.points_used = x.size();
    return fit;
}

std::vector<PersistenceEstimate> sorted_by_T(std::vector<PersistenceEstimate> v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.T < b.T; });
    return v;
}

}  // namespace

ExponentFit fit_exponent(const std::vector<PersistenceEstimate>& estimates, std::size_t burn_in) {
    const auto sorted = sorted_by_T(estimates);
    std::vector<double> x, y, w;
    for (std::size_t i = burn_in; i < sorted.size(); ++i) {
        const auto& e = sorted[i];
        if (e.zero_count || !(e.p_hat > 0.0)) continue;
        double var_log;
        if (e.se > 0.0) {
            var_log = (e.se / e.p_hat) * (e.se / e.p_hat);
        } else if (e.n_paths > 0 && e.p_hat < 1.0) {
            var_log = (1.0 - e.p_hat) / (static_cast<double>(e.n_paths) * e.p_hat);
        } else {
            var_log = 1.0;
        }
        x.push_back(std::log(e.T));
        y.push_back(std::log(e.p_hat));
        w.push_back(1.0 / var_log);
    }
    return weighted_log_fit(x, y, w, burn_in, "fit_exponent");
}

ExponentFit fit_exponent_extrapolated(const std::vector<PersistenceEstimate>& fine,
                                      const std::vector<PersistenceEstimate>& coarse, double beta,
                                      std::size_t burn_in) {
    if (fine.size() != coarse.size()) throw std::invalid_argument("fit_exponent_extrapolated: size mismatch");
    if (!(beta > 0.0)) throw std::invalid_argument("fit_exponent_extrapolated: beta must be positive");
    const auto f = sorted_by_T(fine);
    const auto c = sorted_by_T(coarse);
    const double w = 1.0 / (std::pow(static_cast<double>(kCoarseStride), beta) - 1.0);
    std::vector<double> x, y, wt;
    for (std::size_t i = burn_in; i < f.size(); ++i) {
        if (f[i].T != c[i].T || f[i].n_paths != c[i].n_paths) {
            throw std::invalid_argument("fit_exponent_extrapolated: fine and coarse ladders differ");
        }
        const double pf = f[i].p_hat;
        const double pc = c[i].p_hat;
        if (f[i].zero_count || !(pf > 0.0) || !(pc > 0.0)) continue;
        const double n = static_cast<double>(f[i].n_paths);
        // Delta method; cov(log pf, log pc) = (1 - pc) / (n pc) because fine survival implies coarse survival.
        const double vf = (1.0 - pf) / (n * pf);
        const double vc = (1.0 - pc) / (n * pc);
        double var = (1.0 + w) * (1.0 + w) * vf + w * w * vc - 2.0 * w * (1.0 + w) * vc;
        if (!(var > 0.0)) var = vf;
        if (!(var > 0.0)) var = 1.0 / n;
        x.push_back(std::log(f[i].T));
        y.push_back((1.0 + w) * std::log(pf) - w * std::log(pc));
        wt.push_back(1.0 / var);
    }
    return weighted_log_fit(x, y, wt, burn_in, "fit_exponent_extrapolated");
}

ExponentFit fit_curves(const SurvivalCurves& curves, std::size_t burn_in) {
    if (curves.extrapolating()) return fit_exponent_extrapolated(curves.fine, curves.coarse, curves.beta, burn_in);
    return fit_exponent(curves.fine, burn_in);
}

GapResult paired_exponent_gap(const ProcessSpec& spec_mixed, const ProcessSpec& spec_dominant,
                              const PersistenceQuery& shared, std::size_t burn_in, unsigned threads) {
    PersistenceQuery qm = shared;
    qm.spec = spec_mixed;
    PersistenceQuery qd = shared;
    qd.spec = spec_dominant;
    if (shared.extrapolation_beta) {
        qm.extrapolation_beta = default_bias_exponent(spec_mixed);
        qd.extrapolation_beta = default_bias_exponent(spec_dominant);
    }
    qm.validate();
    qd.validate();
    GapResult out;
    const TimeGrid grid = shared.grid();
    const auto parts = spec_mixed.independent_components();
    if (spec_mixed == spec_dominant) {
        out.mixed_curves = estimate_curves(qm, threads);
        out.dominant_curves = out.mixed_curves;
        out.common_random_numbers = true;
    } else if (parts.size() == 2 && ProcessSpec(parts[0].process) == spec_dominant) {
        const auto components = spec_components(spec_mixed, grid, {}, threads);
        auto obs = query_observables(qm, grid, all_terms(spec_mixed));
        const std::size_t dominant_offset = obs.size();
        for (auto o : query_observables(qd, grid, {{0, 1.0}})) obs.push_back(std::move(o));
        const auto first = run_engine(grid, components, obs, shared.n_paths, shared.seed, threads);
        out.mixed_curves = curves_from(qm, grid, first, 0);
        out.dominant_curves = curves_from(qd, grid, first, dominant_offset);
        out.common_random_numbers = true;
    } else {
        out.mixed_curves = estimate_curves(qm, threads);
        out.dominant_curves = estimate_curves(qd, threads);
    }
    out.mixed = fit_curves(out.mixed_curves, burn_in);
    out.dominant = fit_curves(out.dominant_curves, burn_in);
    out.gap = out.mixed.theta_hat - out.dominant.theta_hat;
    return out;
}

PersistenceEstimate exceedance_probability(const ProcessSpec& specY, double gamma, double A, double T,
                                           const GridPolicy& grid_policy, std::size_t n_paths, const SeedPolicy& seed,
                                           unsigned threads) {
    specY.validate();
    if (!(gamma > specY.dominant_index())) {
        throw std::domain_error("exceedance_probability: gamma must exceed the self-similarity index of Y");
    }
    if (!(A > 0.0) || !(A <= T)) throw std::domain_error("exceedance_probability: need 0 < A <= T");
    const TimeGrid grid = TimeGrid::from_policy(grid_policy, true);
    std::vector<double> limit(grid.size(), kInf);
    std::size_t used = 0;
    for (std::size_t i = grid.first_positive(); i < grid.size(); ++i) {
        if (grid[i] >= A && grid[i] <= T) {
            limit[i] = std::pow(grid[i], gamma);
            ++used;
        }
    }
    if (used == 0) throw std::domain_error("exceedance_probability: no grid time in [A, T]");
    const auto components = spec_components(specY, grid, {}, threads);
    const std::vector<Observable> obs{{"exceed", all_terms(specY), std::move(limit), true}};
    const auto first = run_engine(grid, components, obs, n_paths, seed, threads);
    std::size_t hits = 0;
    for (const auto f : first[0]) hits += f < grid.size() ? 1 : 0;
    return proportion_estimate(T, hits, n_paths, used);
}

double exceedance_union_bound(const ProcessSpec& specY, double gamma, double A, double T, const TimeGrid& grid) {
    double total = 0.0;
    for (std::size_t i = grid.first_positive(); i < grid.size(); ++i) {
        const double t = grid[i];
        if (t < A || t > T) continue;
        const double sd = std::sqrt(mixed_cov(specY, t, t));
        total += std::erfc(std::pow(t, gamma) / (sd * std::numbers::sqrt2));
    }
    return total;
}

}  // namespace mixpersist
