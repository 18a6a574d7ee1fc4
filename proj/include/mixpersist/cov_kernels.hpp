#pragma once

#include <string>
#include <vector>

#include "mixpersist/process_spec.hpp"
#include "mixpersist/quadrature.hpp"
#include "mixpersist/time_grid.hpp"

namespace mixpersist {

/// Covariance of normalized FBM, 1/2 (t^{2H} + s^{2H} - |t-s|^{2H}).
[[nodiscard]] double fbm_cov(HurstParam H, double s, double t);

/// Molchan-Golosov normalizing constant C(H); C(1/2) = 1.
[[nodiscard]] double normalizing_constant(HurstParam H);

/// Molchan-Golosov kernel K_H(t,s) for 0 < s < t, with K_{1/2} = 1.
///
/// The inner integral of either branch has an integrable power singularity at u = s. It is
/// flattened by w = (u-s)^{H-1/2} when H > 1/2 and by w = (u-s)^{H+1/2} when H < 1/2, after which
/// the integrand is smooth apart from a scale change near w = s^{...}; the range is split there and
/// the upper piece is integrated in log w.
[[nodiscard]] double molchan_golosov_kernel(HurstParam H, double t, double s, const QuadratureConfig& q = {});

/// Integral over u in (0, upper) of K_H(t1,u) K_K(t2,u), for upper <= min(t1, t2).
[[nodiscard]] double kernel_product_integral(HurstParam H, HurstParam K, double t1, double t2,
                                             double upper, const QuadratureConfig& q = {});

/// Cross term of the completely correlated mixture without the a*b factor:
/// integral over (0, s^t) of K_H(t,u) K_K(s,u) + K_H(s,u) K_K(t,u).
[[nodiscard]] double ccm_cross(HurstParam H, HurstParam K, double s, double t, const QuadratureConfig& q = {});

/// Covariance of a B^H + b B^K with both FBMs built from one Brownian motion.
[[nodiscard]] double ccm_cov(double a, double b, HurstParam H, HurstParam K, double s, double t,
                             const QuadratureConfig& q = {});

/// Riemann-Liouville covariance, integral over (0, s^t) of (t-u)^{H-1/2} (s-u)^{H-1/2}.
[[nodiscard]] double rl_cov(HurstParam H, double s, double t, const QuadratureConfig& q = {});

/// Integrated FBM covariance, closed form.
[[nodiscard]] double ifbm_cov(HurstParam H, double s, double t);

/// Double integral of ccm_cross over [0,s] x [0,t]; the extra term of integrated ccmFBM.
/// Reduced to one nested quadrature by exchanging the order of integration; milliseconds to seconds per entry.
[[nodiscard]] double integrated_ccm_cross(HurstParam H, HurstParam K, double s, double t,
                                          const QuadratureConfig& q = {});

/// E[X_s X_t] for any spec.
[[nodiscard]] double mixed_cov(const ProcessSpec& spec, double s, double t, const QuadratureConfig& q = {});

/// Autocovariance of the Lamperti transform, r(tau) = cov(e^{-tau/2}, e^{tau/2}) (equivalently
/// e^{-d tau} cov(1, e^tau)). Mixed specs are not self-similar and are rejected.
[[nodiscard]] double lamperti_autocov(const ProcessSpec& spec, double tau, const QuadratureConfig& q = {});

/// Dense covariance over a grid, certified PSD by Cholesky with escalating diagonal jitter.
struct CovarianceMatrix {
    std::string spec_descriptor;
    TimeGrid grid;
    /// Row-major n x n.
    std::vector<double> entries;
    double jitter_applied = 0.0;
    /// Row-major lower Cholesky factor of entries + jitter*I over the positive times;
    /// rows and columns of a pinned origin are zero.
    std::vector<double> factor;

    [[nodiscard]] std::size_t size() const { return grid.size(); }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return entries[i * size() + j]; }
    [[nodiscard]] double max_diagonal() const;
};

/// Raised when no jitter up to the cap makes the matrix factor.
class PsdFailure : public std::runtime_error {
public:
    PsdFailure(const std::string& what, double min_eigenvalue)
        : std::runtime_error(what), min_eigenvalue_(min_eigenvalue) {}
    [[nodiscard]] double most_negative_eigenvalue() const { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

/// Relative jitter cap: jitter_applied <= kJitterCap * max diagonal.
inline constexpr double kJitterCap = 1e-10;

/// Entry-wise assembly only, no factorization.
[[nodiscard]] std::vector<double> assemble_covariance(const ProcessSpec& spec, const TimeGrid& grid,
                                                      const QuadratureConfig& q = {}, unsigned threads = 0);

/// Entries plus certified factor. On LampertiLog grids, quadrature-backed terms are evaluated
/// once per lag using homogeneity, c(s,t) = t^d c(s/t, 1).
[[nodiscard]] CovarianceMatrix cov_matrix(const ProcessSpec& spec, const TimeGrid& grid,
                                          const QuadratureConfig& q = {}, unsigned threads = 0);

/// Factor an already assembled matrix (exposed for tests and the binary cache loader).
void certify_psd(CovarianceMatrix& cov);

}  // namespace mixpersist
