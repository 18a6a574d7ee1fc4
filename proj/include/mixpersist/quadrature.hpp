#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mixpersist {

struct QuadratureConfig {
    double abs_tol = 1e-13;
    double rel_tol = 1e-11;
    int max_subdivisions = 400;
    /// Power-law exponent of an integrable endpoint singularity, (u-a)^hint. 0 = none.
    double singularity_exponent_hint = 0.0;
};

/// Raised when adaptive quadrature stops before meeting its tolerance.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, double achieved_abs_error)
        : std::runtime_error(what), achieved_(achieved_abs_error) {}
    [[nodiscard]] double achieved_tolerance() const { return achieved_; }

private:
    double achieved_;
};

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;
    int subdivisions = 0;
    bool converged = false;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double resg = fc * kWg[3];
    double resk = fc * kWgk[7];
    std::array<double, 7> f1{}, f2{};
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        f1[j] = f(center - dx);
        f2[j] = f(center + dx);
        resk += kWgk[j] * (f1[j] + f2[j]);
        if (j % 2 == 1) resg += kWg[j / 2] * (f1[j] + f2[j]);
    }
    const double mean = 0.5 * resk;
    double resasc = kWgk[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j) resasc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
    resasc *= std::abs(half);
    const double value = resk * half;
    double err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    if (!std::isfinite(value)) err = std::numeric_limits<double>::infinity();
    return {a, b, value, err};
}

}  // namespace detail

/// Adaptive bisection driven by G7/K15 error estimates. Never throws.
template <class F>
QuadratureResult gauss_kronrod_adaptive(F&& f, double a, double b, const QuadratureConfig& cfg) {
    QuadratureResult out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    std::priority_queue<detail::Segment> heap;
    heap.push(detail::gk15(f, a, b));
    double total = heap.top().value;
    double error = heap.top().error;
    int splits = 0;
    while (error > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total)) && splits < cfg.max_subdivisions) {
        const detail::Segment worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > std::min(worst.a, worst.b) && mid < std::max(worst.a, worst.b))) break;
        heap.pop();
        const auto left = detail::gk15(f, worst.a, mid);
        const auto right = detail::gk15(f, mid, worst.b);
        heap.push(left);
        heap.push(right);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        ++splits;
    }
    // Re-sum to shed drift from the running updates.
    total = 0.0;
    error = 0.0;
    while (!heap.empty()) {
        total += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    out.value = total;
    out.abs_error = error;
    out.subdivisions = splits;
    out.converged = std::isfinite(total) && error <= std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total));
    return out;
}

/// As gauss_kronrod_adaptive but throws NumericalFailure when the tolerance is missed.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureConfig& cfg, std::string_view who) {
    const auto r = gauss_kronrod_adaptive(f, a, b, cfg);
    if (!r.converged) {
        throw NumericalFailure(std::string(who) + ": quadrature did not converge after " +
                                   std::to_string(r.subdivisions) + " subdivisions (abs error " +
                                   std::to_string(r.abs_error) + ")",
                               r.abs_error);
    }
    return r.value;
}

/// Integral over [a,b] of f whose endpoint behaviour is (u-a)^alpha_left and (b-u)^alpha_right
/// (alpha > -1). Each half is mapped by w = (u-a)^(1+alpha) (resp. (b-u)^(1+alpha)), which turns
/// the power law into a constant before adaptive refinement.
template <class F>
double integrate_power_singular(F&& f, double a, double b, double alpha_left, double alpha_right,
                                const QuadratureConfig& cfg, std::string_view who) {
    if (a == b) return 0.0;
    const double mid = 0.5 * (a + b);
    const double half = mid - a;
    QuadratureConfig sub = cfg;
    sub.abs_tol = 0.5 * cfg.abs_tol;

    auto side = [&](double alpha, bool left) {
        if (alpha == 0.0) {
            return left ? integrate(f, a, mid, sub, who) : integrate(f, mid, b, sub, who);
        }
        const double p = 1.0 + alpha;
        const double inv = 1.0 / p;
        auto g = [&](double w) {
            if (w <= 0.0) return 0.0;
            const double d = std::pow(w, inv);
            const double jac = inv * d / w;
            return f(left ? a + d : b - d) * jac;
        };
        return integrate(g, 0.0, std::pow(half, p), sub, who);
    };
    return side(alpha_left, true) + side(alpha_right, false);
}

}  // namespace mixpersist
