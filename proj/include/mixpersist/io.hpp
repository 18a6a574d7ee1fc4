#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixpersist/cov_kernels.hpp"
#include "mixpersist/path_sampler.hpp"
#include "mixpersist/persistence.hpp"
#include "mixpersist/rkhs_spectral.hpp"

namespace mixpersist {

// Binary container, little-endian throughout (layout in docs/formats.md):
//   "MXPB" | u32 version | u32 kind | u32 spec length | spec bytes | grid | u64 rows | u64 cols
//   | f64 jitter | u64 master_seed | u64 experiment_id | u64 first_replicate | rows*cols f64
inline constexpr std::uint32_t kContainerVersion = 1;

enum class ContainerKind : std::uint32_t { Covariance = 1, Paths = 2 };

/// Raised on malformed or truncated containers.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void write_covariance(std::ostream& os, const CovarianceMatrix& cov);
void write_covariance(const std::filesystem::path& file, const CovarianceMatrix& cov);
/// Entries, grid and jitter are restored; the factor is recomputed by certify_psd.
[[nodiscard]] CovarianceMatrix read_covariance(std::istream& is);
[[nodiscard]] CovarianceMatrix read_covariance(const std::filesystem::path& file);

void write_paths_binary(std::ostream& os, const PathBatch& batch);
void write_paths_binary(const std::filesystem::path& file, const PathBatch& batch);
[[nodiscard]] PathBatch read_paths_binary(std::istream& is);
[[nodiscard]] PathBatch read_paths_binary(const std::filesystem::path& file);

/// Header row of t-values, then one row per replicate.
void write_paths_csv(std::ostream& os, const PathBatch& batch);

/// T,p_hat,ci_low,ci_high,n_paths,grid_points_used
void write_persistence_csv(std::ostream& os, const std::vector<PersistenceEstimate>& estimates);

/// Inverse of write_persistence_csv. se is rebuilt as sqrt(p(1-p)/n).
[[nodiscard]] std::vector<PersistenceEstimate> read_persistence_csv(std::istream& is);

struct FitRow {
    std::string spec;
    ExponentFit fit;
};
/// spec,theta_hat,stderr,intercept,r_squared,T_min,T_max,burn_in
void write_fit_csv(std::ostream& os, const std::vector<FitRow>& rows);

/// x,p
void write_spectral_csv(std::ostream& os, const SpectralDensity& density);
/// tau,scaled_h1 with scaled_h1 = h1_tilde(tau) * tau^(1-alpha)
void write_h1_csv(std::ostream& os, double alpha, double x0, const std::vector<double>& taus);

/// Opens for writing with exceptions enabled; creates parent directories.
[[nodiscard]] std::ofstream open_output(const std::filesystem::path& file, bool binary = false);

}  // namespace mixpersist
