#include "mixpersist/rkhs_spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mixpersist/cov_kernels.hpp"

namespace mixpersist {

namespace {

constexpr double kTauMax = 2000.0;

void require_alpha(double alpha, double hi, const char* who) {
    if (!(alpha > 0.0) || !(alpha < hi)) {
        throw std::domain_error(std::string(who) + ": alpha out of range");
    }
}

}  // namespace

SpectralDensity spectral_density(const ProcessSpec& spec, std::span<const double> x_grid, const QuadratureConfig& q) {
    if (!spec.is_self_similar()) throw std::domain_error("spectral_density: spec must be self-similar");
    SpectralDensity out;
    out.x.assign(x_grid.begin(), x_grid.end());
    out.p.resize(out.x.size());

    QuadratureConfig cfg = q;
    cfg.abs_tol = std::max(q.abs_tol, 1e-15);
    auto r = [&](double tau) { return lamperti_autocov(spec, tau, q); };
    const double tol = std::max(cfg.abs_tol, 1e-12);

    auto transform = [&](double x) {
        auto f = [&](double tau) { return std::cos(tau * x) * r(tau); };
        auto g = [&](double tau) { return std::abs(r(tau)); };
        double total = 0.0;
        double prev_mass = 0.0;
        for (double a = 0.0; a < kTauMax; a += 1.0) {
            total += integrate(f, a, a + 1.0, cfg, "spectral_density");
            const double mass = integrate(g, a, a + 1.0, cfg, "spectral_density");
            if (a > 0.0 && prev_mass > 0.0) {
                const double ratio = mass / prev_mass;
                if (ratio < 1.0) {
                    const double tail = mass * ratio / (1.0 - ratio);
                    if (tail < tol) return total / std::numbers::pi;
                }
            }
            if (mass == 0.0) return total / std::numbers::pi;
            prev_mass = mass;
        }
        throw NumericalFailure("spectral_density(" + spec.descriptor() + "): autocovariance tail not negligible by tau = " +
                                   format_double(kTauMax),
                               prev_mass);
    };
    out.limit_at_zero = transform(0.0);
    for (std::size_t i = 0; i < out.x.size(); ++i) {
        out.p[i] = out.x[i] == 0.0 ? out.limit_at_zero : transform(std::abs(out.x[i]));
    }
    return out;
}

double oscillatory_partial(double alpha, double Y) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) throw std::domain_error("oscillatory_partial: alpha must lie in (0,1)");
    if (!(Y >= 0.0) || !std::isfinite(Y)) throw std::domain_error("oscillatory_partial: bad upper limit");
    if (Y == 0.0) return 0.0;
    QuadratureConfig cfg;
    cfg.abs_tol = 1e-15;
    cfg.rel_tol = 1e-13;
    auto f = [alpha](double y) { return y > 0.0 ? std::pow(y, -alpha) * std::cos(y) : 0.0; };
    const double first = std::min(Y, 0.5 * std::numbers::pi);
    double total = integrate_power_singular(f, 0.0, first, -alpha, 0.0, cfg, "oscillatory_partial");
    for (double a = first; a < Y; a += std::numbers::pi) {
        total += integrate(f, a, std::min(Y, a + std::numbers::pi), cfg, "oscillatory_partial");
    }
    return 2.0 * total;
}

double h1_tilde(double alpha, double x0, double tau) {
    require_alpha(alpha, 0.5, "h1_tilde");
    if (!(x0 > 0.0) || !(tau > 0.0)) throw std::domain_error("h1_tilde: x0 and tau must be positive");
    return std::pow(tau, alpha - 1.0) * oscillatory_partial(alpha, tau * x0);
}

double c0_constant(double alpha) {
    require_alpha(alpha, 1.0, "c0_constant");
    constexpr int kTerms = 48;
    QuadratureConfig cfg;
    cfg.abs_tol = 1e-16;
    cfg.rel_tol = 1e-14;
    auto f = [alpha](double y) { return y > 0.0 ? std::pow(y, -alpha) * std::cos(y) : 0.0; };
    // Partial sums at the zeros of cos; consecutive half-period pieces alternate in sign.
    std::vector<double> s(kTerms);
    double acc = integrate_power_singular(f, 0.0, 0.5 * std::numbers::pi, -alpha, 0.0, cfg, "c0_constant");
    double a = 0.5 * std::numbers::pi;
    for (int k = 0; k < kTerms; ++k) {
        acc += integrate(f, a, a + std::numbers::pi, cfg, "c0_constant");
        a += std::numbers::pi;
        s[k] = acc;
    }
    for (int level = 1; level < kTerms; ++level) {
        for (int k = 0; k + level < kTerms; ++k) s[k] = 0.5 * (s[k] + s[k + 1]);
    }
    return 2.0 * s[0];
}

double DriftEnvelope::operator()(double t) const {
    if (!(t >= t_floor)) return 0.0;
    return c * std::pow(t, H.value()) * std::pow(std::log(t), alpha - 1.0);
}

DriftEnvelope build_drift(HurstParam H, double alpha, double gamma, double c) {
    require_fbm_range(H, "build_drift");
    require_alpha(alpha, 0.5, "build_drift");
    if (!(gamma > 0.0)) throw std::domain_error("build_drift: gamma must be positive");
    if (!(gamma < H.value())) throw std::domain_error("build_drift: gamma must be below H");
    const double h = H.value();
    DriftEnvelope env;
    env.H = H;
    env.alpha = alpha;
    env.gamma = gamma;
    const double knee = (1.0 - alpha) / h;
    env.t_floor = std::exp(knee);
    const double shape_at_knee = std::exp(h * knee) * std::pow(knee, alpha - 1.0);
    env.c = c > 0.0 ? c : 1.0 / shape_at_knee;
    if (env.c * shape_at_knee < 1.0) {
        // A small c pushes the floor out to where the envelope reaches 1.
        auto level = [&](double L) { return std::log(env.c) + h * L + (alpha - 1.0) * std::log(L); };
        double lo = knee;
        double hi = 2.0 * knee;
        while (level(hi) < 0.0) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (level(mid) >= 0.0 ? hi : lo) = mid;
        }
        env.t_floor = std::exp(hi);
    }

    // log h(t) - gamma log t = log c + (H - gamma) L + (alpha - 1) log L with L = log t; convex
    // in L with its minimum at L* = (1 - alpha)/(H - gamma), so beyond max(log t_floor, L*) one bisection suffices.
    auto g = [&](double L) { return std::log(env.c) + (h - gamma) * L + (alpha - 1.0) * std::log(L); };
    double lo = std::max(std::log(env.t_floor), (1.0 - alpha) / (h - gamma));
    if (g(lo) > 0.0) {
        env.crossover = env.t_floor;
        return env;
    }
    double hi = lo * 2.0;
    while (g(hi) <= 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? hi : lo) = mid;
    }
    env.crossover = std::exp(hi);
    return env;
}

}  // namespace mixpersist
