#pragma once

#include <span>
#include <vector>

#include "mixpersist/process_spec.hpp"
#include "mixpersist/quadrature.hpp"

namespace mixpersist {

/// Cosine transform of a Lamperti autocovariance on a frequency grid.
struct SpectralDensity {
    std::vector<double> x;
    std::vector<double> p;
    /// (1/pi) times the integral of r over (0, inf).
    double limit_at_zero = 0.0;
};

/// p(x) = (1/pi) * integral over (0, inf) of cos(tau x) r(tau), summed over unit chunks until a
/// geometric tail estimate of the remaining |r| mass drops below tolerance. Throws
/// NumericalFailure when that has not happened by tau = 2000.
[[nodiscard]] SpectralDensity spectral_density(const ProcessSpec& spec, std::span<const double> x_grid,
                                               const QuadratureConfig& q = {});

/// 2 * integral over (0, Y) of y^{-alpha} cos(y): first quarter period with the singular
/// substitution, then one Gauss-Kronrod pass per half period between zeros of cos.
[[nodiscard]] double oscillatory_partial(double alpha, double Y);

/// 2 * integral over (0, x0) of x^{-alpha} cos(tau x) = 2 tau^{alpha-1} oscillatory_partial(tau x0) / 2.
[[nodiscard]] double h1_tilde(double alpha, double x0, double tau);

/// c0 = 2 * integral over (0, inf) of y^{-alpha} cos(y), from half-period partial sums and
/// repeated averaging of the alternating tail.
[[nodiscard]] double c0_constant(double alpha);

/// h(t) = c t^H (log t)^{alpha-1} for t >= t_floor and 0 below.
struct DriftEnvelope {
    HurstParam H{0.5};
    double alpha = 0.25;
    double c = 1.0;
    double t_floor = 1.0;
    double gamma = 0.0;
    /// h(t) > t^gamma for every t >= crossover.
    double crossover = 0.0;

    [[nodiscard]] double operator()(double t) const;
};

/// t_floor sits at the knee e^{(1-alpha)/H} where t^H (log t)^{alpha-1} is smallest, so the
/// envelope is increasing from there on. c <= 0 picks c with h(t_floor) = 1.
[[nodiscard]] DriftEnvelope build_drift(HurstParam H, double alpha, double gamma, double c = 0.0);

}  // namespace mixpersist
