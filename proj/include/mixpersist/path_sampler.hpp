#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mixpersist/cov_kernels.hpp"
#include "mixpersist/process_spec.hpp"
#include "mixpersist/rng.hpp"
#include "mixpersist/simd/kernels.hpp"
#include "mixpersist/time_grid.hpp"

namespace mixpersist {

/// Replicate-major paths: values[r * grid.size() + i] is replicate r at time grid[i].
struct PathBatch {
    ProcessSpec spec;
    TimeGrid grid;
    std::size_t n_paths = 0;
    std::vector<double> values;
    SeedPolicy seed;
    /// Set when the circulant sampler had to give up and fall back to Cholesky.
    bool circulant_fallback = false;

    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        return {values.data() + r * grid.size(), grid.size()};
    }
    [[nodiscard]] std::span<double> row(std::size_t r) { return {values.data() + r * grid.size(), grid.size()}; }
};

/// Cholesky factor over the positive times of a grid, packed for the SIMD product.
struct FactorPlan {
    TimeGrid grid;
    simd::PackedLower packed;

    static FactorPlan from(const CovarianceMatrix& cov);
    /// Number of positive grid times (rows of the factor).
    [[nodiscard]] std::size_t rows() const { return packed.m; }
};

/// Paths per block in the blocked samplers.
inline constexpr std::size_t kBlockPaths = 240;

/// Draws `count` paths (replicates first .. first+count-1 of stream `component`) into X,
/// time-major over the positive times: X[i * ld + j] for path j. `Z` is scratch. ld is
/// count rounded up to a multiple of 8; padding columns come out zero.
void sample_block(const FactorPlan& plan, const SeedPolicy& seed, std::uint64_t component, std::uint64_t first,
                  std::size_t count, std::size_t ld, std::vector<double>& Z, std::vector<double>& X,
                  simd::Isa isa = simd::active_isa());

/// Rows are i.i.d. centred Gaussian vectors with covariance cov. Row r uses replicate
/// seed.first_replicate + r of stream `component`.
[[nodiscard]] PathBatch cholesky_sample(const CovarianceMatrix& cov, std::size_t n_paths, const SeedPolicy& seed,
                                        std::uint64_t component = 0, unsigned threads = 0);

/// fGn autocovariance gamma(k) = 1/2(|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}) dt^{2H}.
[[nodiscard]] double fgn_autocov(HurstParam H, double k, double dt = 1.0);

/// Eigenvalues of the circulant matrix with first row [g_0..g_{m/2}, g_{m/2-1}..g_1].
[[nodiscard]] std::vector<double> circulant_eigenvalues(std::span<const double> gamma_half, std::size_t m);

/// FBM on the uniform grid {0, dt, .., n_steps dt} by circulant embedding of fGn
/// (Davies-Harte, real part only). Falls back to a doubled embedding and then to Cholesky.
[[nodiscard]] PathBatch fgn_circulant_sample(HurstParam H, std::size_t n_steps, double dt, std::size_t n_paths,
                                             const SeedPolicy& seed, std::uint64_t component = 0,
                                             unsigned threads = 0);

enum class Backend { Auto, Cholesky, Circulant };

/// True when the circulant backend can sample spec on grid (uniform grid with origin,
/// pure FBM/BM or an independent mixture of them).
[[nodiscard]] bool circulant_legal(const ProcessSpec& spec, const TimeGrid& grid);

/// Independent components use streams 0, 1, ... in the order of ProcessSpec::independent_components,
/// so a pure FBM(H) run reproduces component 0 of any independent mixture dominated by FBM(H).
[[nodiscard]] PathBatch sample_process(const ProcessSpec& spec, const TimeGrid& grid, std::size_t n_paths,
                                       const SeedPolicy& seed, Backend backend = Backend::Auto,
                                       const QuadratureConfig& q = {}, unsigned threads = 0);

/// Row-wise cumulative trapezoid: out[k] = sum over i<k of (x_i + x_{i+1})/2 (t_{i+1} - t_i).
[[nodiscard]] PathBatch integrate_paths(const PathBatch& batch);

}  // namespace mixpersist
