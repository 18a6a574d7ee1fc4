#include "mixpersist/path_sampler.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <variant>

#include "mixpersist/parallel.hpp"

namespace mixpersist {

namespace {

std::size_t padded(std::size_t count) {
    return (count + simd::kColumnQuantum - 1) / simd::kColumnQuantum * simd::kColumnQuantum;
}

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (p == nullptr) throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

ProcessSpec component_spec(const ProcessVariant& v) { return ProcessSpec(v); }

}  // namespace

FactorPlan FactorPlan::from(const CovarianceMatrix& cov) {
    const std::size_t n = cov.size();
    const std::size_t p0 = cov.grid.first_positive();
    return {cov.grid, simd::pack_lower(cov.factor.data() + p0 * n + p0, n - p0, n)};
}

void sample_block(const FactorPlan& plan, const SeedPolicy& seed, std::uint64_t component, std::uint64_t first,
                  std::size_t count, std::size_t ld, std::vector<double>& Z, std::vector<double>& X,
                  simd::Isa isa) {
    const std::size_t m = plan.rows();
    if (ld < count || ld % simd::kColumnQuantum != 0) throw std::invalid_argument("sample_block: bad ld");
    Z.assign(m * ld, 0.0);
    X.resize(plan.packed.padded_rows() * ld);
    std::vector<double> column(m);
    for (std::size_t j = 0; j < count; ++j) {
        fill_normals(seed, first + j, component, column);
        for (std::size_t k = 0; k < m; ++k) Z[k * ld + j] = column[k];
    }
    simd::trmm(isa, plan.packed, Z.data(), X.data(), ld);
}

PathBatch cholesky_sample(const CovarianceMatrix& cov, std::size_t n_paths, const SeedPolicy& seed,
                          std::uint64_t component, unsigned threads) {
    if (cov.factor.size() != cov.size() * cov.size()) {
        throw std::invalid_argument("cholesky_sample: covariance matrix is not factored");
    }
    PathBatch out{parse_spec(cov.spec_descriptor), cov.grid, n_paths, {}, seed, false};
    const std::size_t n = cov.size();
    out.values.assign(n_paths * n, 0.0);
    if (n_paths == 0) return out;
    const FactorPlan plan = FactorPlan::from(cov);
    const std::size_t p0 = cov.grid.first_positive();
    const std::size_t m = plan.rows();
    const std::size_t blocks = (n_paths + kBlockPaths - 1) / kBlockPaths;
    parallel_for(blocks, threads, [&](std::size_t b) {
        const std::size_t begin = b * kBlockPaths;
        const std::size_t count = std::min(kBlockPaths, n_paths - begin);
        const std::size_t ld = padded(count);
        std::vector<double> Z, X;
        sample_block(plan, seed, component, seed.first_replicate + begin, count, ld, Z, X);
        for (std::size_t j = 0; j < count; ++j) {
            double* row = out.values.data() + (begin + j) * n;
            for (std::size_t k = 0; k < m; ++k) row[p0 + k] = X[k * ld + j];
        }
    });
    return out;
}

double fgn_autocov(HurstParam H, double k, double dt) {
    require_fbm_range(H, "fgn_autocov");
    const double h2 = 2.0 * H.value();
    const double a = std::abs(k);
    return 0.5 * (std::pow(a + 1.0, h2) + std::pow(std::abs(a - 1.0), h2) - 2.0 * std::pow(a, h2)) *
           std::pow(dt, h2);
}

std::vector<double> circulant_eigenvalues(std::span<const double> gamma_half, std::size_t m) {
    if (m < 2 || m % 2 != 0 || gamma_half.size() < m / 2 + 1) {
        throw std::invalid_argument("circulant_eigenvalues: need even m and m/2+1 autocovariances");
    }
    auto row = fftw_buffer<double>(m);
    auto spec = fftw_buffer<fftw_complex>(m / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(m), row.get(), spec.get(), FFTW_ESTIMATE);
    }
    for (std::size_t j = 0; j <= m / 2; ++j) row[j] = gamma_half[j];
    for (std::size_t j = m / 2 + 1; j < m; ++j) row[j] = gamma_half[m - j];
    fftw_execute(plan);
    std::vector<double> lambda(m);
    for (std::size_t k = 0; k <= m / 2; ++k) lambda[k] = spec[k][0];
    for (std::size_t k = m / 2 + 1; k < m; ++k) lambda[k] = lambda[m - k];
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    return lambda;
}

PathBatch fgn_circulant_sample(HurstParam H, std::size_t n_steps, double dt, std::size_t n_paths,
                               const SeedPolicy& seed, std::uint64_t component, unsigned threads) {
    require_fbm_range(H, "fgn_circulant_sample");
    if (n_steps == 0 || !(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("fgn_circulant_sample: need n_steps >= 1 and dt > 0");
    }
    const TimeGrid grid = TimeGrid::uniform(dt * static_cast<double>(n_steps), n_steps, true);
    const ProcessSpec spec = H.value() == 0.5 ? ProcessSpec::brownian() : ProcessSpec::fbm(H.value());

    std::vector<double> lambda;
    std::size_t m = 0;
    for (std::size_t attempt = 0; attempt < 2 && m == 0; ++attempt) {
        const std::size_t half = n_steps << attempt;
        std::vector<double> gamma(half + 1);
        for (std::size_t k = 0; k <= half; ++k) gamma[k] = fgn_autocov(H, static_cast<double>(k));
        auto lam = circulant_eigenvalues(gamma, 2 * half);
        const double top = *std::max_element(lam.begin(), lam.end());
        const double low = *std::min_element(lam.begin(), lam.end());
        if (low >= -1e-12 * top) {
            for (auto& l : lam) l = std::max(l, 0.0);
            lambda = std::move(lam);
            m = 2 * half;
        }
    }
    if (m == 0) {
        auto cov = cov_matrix(spec, grid, {}, threads);
        PathBatch out = cholesky_sample(cov, n_paths, seed, component, threads);
        out.circulant_fallback = true;
        return out;
    }

    PathBatch out{spec, grid, n_paths, std::vector<double>(n_paths * (n_steps + 1), 0.0), seed, false};
    if (n_paths == 0) return out;
    std::vector<double> scale(m / 2 + 1);
    for (std::size_t k = 0; k <= m / 2; ++k) scale[k] = std::sqrt(lambda[k] / static_cast<double>(m));
    const double step_scale = std::pow(dt, H.value());

    const unsigned workers = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(n_paths));
    const std::size_t per = (n_paths + workers - 1) / workers;
    parallel_for(workers, workers, [&](std::size_t w) {
        const std::size_t begin = w * per;
        const std::size_t end = std::min(n_paths, begin + per);
        if (begin >= end) return;
        auto in = fftw_buffer<fftw_complex>(m / 2 + 1);
        auto x = fftw_buffer<double>(m);
        fftw_plan plan;
        {
            std::lock_guard lock(fftw_planner_mutex());
            plan = fftw_plan_dft_c2r_1d(static_cast<int>(m), in.get(), x.get(), FFTW_ESTIMATE);
        }
        std::vector<double> z(m);
        for (std::size_t r = begin; r < end; ++r) {
            fill_normals(seed, seed.first_replicate + r, component, z);
            // Hermitian spectrum: real at 0 and m/2, (A + iB)/sqrt(2) in between.
            in[0][0] = scale[0] * z[0];
            in[0][1] = 0.0;
            in[m / 2][0] = scale[m / 2] * z[1];
            in[m / 2][1] = 0.0;
            for (std::size_t k = 1; k < m / 2; ++k) {
                in[k][0] = scale[k] * z[2 * k] * std::numbers::sqrt2 * 0.5;
                in[k][1] = scale[k] * z[2 * k + 1] * std::numbers::sqrt2 * 0.5;
            }
            fftw_execute(plan);
            double* row = out.values.data() + r * (n_steps + 1);
            double acc = 0.0;
            for (std::size_t i = 0; i < n_steps; ++i) {
                acc += x[i] * step_scale;
                row[i + 1] = acc;
            }
        }
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    });
    return out;
}

bool circulant_legal(const ProcessSpec& spec, const TimeGrid& grid) {
    if (!std::holds_alternative<UniformPolicy>(grid.policy()) || !grid.includes_origin()) return false;
    const auto& v = spec.variant();
    return std::holds_alternative<BrownianMotion>(v) || std::holds_alternative<FractionalBM>(v) ||
           std::holds_alternative<MixedIndependent>(v);
}

PathBatch sample_process(const ProcessSpec& spec, const TimeGrid& grid, std::size_t n_paths, const SeedPolicy& seed,
                         Backend backend, const QuadratureConfig& q, unsigned threads) {
    spec.validate();
    const bool legal = circulant_legal(spec, grid);
    if (backend == Backend::Circulant && !legal) {
        throw std::invalid_argument("sample_process: circulant backend needs a uniform grid with origin and an "
                                    "FBM or independent mixed FBM spec, got " + spec.descriptor());
    }
    const bool circulant = backend == Backend::Circulant || (backend == Backend::Auto && legal);
    const std::size_t n = grid.size();
    PathBatch out{spec, grid, n_paths, std::vector<double>(n_paths * n, 0.0), seed, false};
    const auto parts = spec.independent_components();
    for (std::size_t c = 0; c < parts.size(); ++c) {
        const ProcessSpec piece = component_spec(parts[c].process);
        const PathBatch sample = [&] {
            if (!circulant) return cholesky_sample(cov_matrix(piece, grid, q, threads), n_paths, seed, c, threads);
            const auto& u = std::get<UniformPolicy>(grid.policy());
            return fgn_circulant_sample(HurstParam(piece.dominant_index()), u.n, u.t_max / static_cast<double>(u.n),
                                        n_paths, seed, c, threads);
        }();
        out.circulant_fallback = out.circulant_fallback || sample.circulant_fallback;
        const double w = parts[c].weight;
        for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += w * sample.values[i];
    }
    return out;
}

PathBatch integrate_paths(const PathBatch& batch) {
    if (!batch.grid.includes_origin()) throw std::invalid_argument("integrate_paths: grid must include the origin");
    PathBatch out = batch;
    const auto t = batch.grid.times();
    const std::size_t n = t.size();
    for (std::size_t r = 0; r < batch.n_paths; ++r) {
        const auto src = batch.row(r);
        auto dst = out.row(r);
        double acc = 0.0;
        dst[0] = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            acc += 0.5 * (src[i] + src[i + 1]) * (t[i + 1] - t[i]);
            dst[i + 1] = acc;
        }
    }
    return out;
}

}  // namespace mixpersist
