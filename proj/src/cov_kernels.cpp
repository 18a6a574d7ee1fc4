#include "mixpersist/cov_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <variant>

#include "mixpersist/linalg.hpp"
#include "mixpersist/parallel.hpp"

namespace mixpersist {

namespace {

void require_times(double s, double t, const char* who) {
    if (!(s >= 0.0) || !(t >= 0.0) || !std::isfinite(s) || !std::isfinite(t)) {
        throw std::domain_error(std::string(who) + ": times must be finite and >= 0");
    }
}

// Integral of f over [0, W], split at w0 when 0 < w0 < W; the upper piece is done in log w
// because the integrand there varies over many decades of w.
template <class F>
double integrate_with_log_tail(F&& f, double W, double w0, const QuadratureConfig& q, const char* who) {
    if (!(w0 > 0.0) || w0 >= W) return integrate(f, 0.0, W, q, who);
    const double head = integrate(f, 0.0, w0, q, who);
    auto g = [&](double y) {
        const double w = std::exp(y);
        return f(w) * w;
    };
    return head + integrate(g, std::log(w0), std::log(W), q, who);
}

QuadratureConfig inner_config(const QuadratureConfig& q) {
    QuadratureConfig inner = q;
    inner.rel_tol = std::max(1e-14, 0.1 * q.rel_tol);
    inner.abs_tol = 1e-300;
    return inner;
}

// (1 - x)^q - 1 + q x for x in [0,1], without cancellation for small x.
double convex_remainder(double q, double x) {
    if (x > 0.25) return std::pow(1.0 - x, q) - 1.0 + q * x;
    double term = q * (q - 1.0) / 2.0 * x * x;
    double sum = term;
    for (int k = 3; k < 200; ++k) {
        term *= -x * (q - static_cast<double>(k - 1)) / static_cast<double>(k);
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

enum class TermKind { Min, Fbm, Rl, Ifbm, CcmCross, IccmCross };

struct CovTerm {
    double coeff;
    double degree;  // homogeneity: c(ls, lt) = l^degree c(s, t)
    TermKind kind;
    HurstParam H;
    HurstParam K;
};

bool is_quadrature_term(TermKind k) {
    return k == TermKind::Rl || k == TermKind::CcmCross || k == TermKind::IccmCross;
}

std::vector<CovTerm> covariance_terms(const ProcessSpec& spec) {
    spec.validate();
    const HurstParam half(0.5);
    std::vector<CovTerm> terms;
    const auto& v = spec.variant();
    if (std::holds_alternative<BrownianMotion>(v)) {
        terms.push_back({1.0, 1.0, TermKind::Min, half, half});
    } else if (const auto* f = std::get_if<FractionalBM>(&v)) {
        terms.push_back({1.0, 2.0 * f->H.value(), TermKind::Fbm, f->H, f->H});
    } else if (const auto* r = std::get_if<RiemannLiouville>(&v)) {
        terms.push_back({1.0, 2.0 * r->H.value(), TermKind::Rl, r->H, r->H});
    } else if (const auto* i = std::get_if<IntegratedFBM>(&v)) {
        terms.push_back({1.0, 2.0 + 2.0 * i->H.value(), TermKind::Ifbm, i->H, i->H});
    } else if (const auto* m = std::get_if<MixedIndependent>(&v)) {
        terms.push_back({m->a * m->a, 2.0 * m->H.value(), TermKind::Fbm, m->H, m->H});
        terms.push_back({m->b * m->b, 2.0 * m->K.value(), TermKind::Fbm, m->K, m->K});
    } else if (const auto* m = std::get_if<MixedCorrelated>(&v)) {
        terms.push_back({m->a * m->a, 2.0 * m->H.value(), TermKind::Fbm, m->H, m->H});
        terms.push_back({m->b * m->b, 2.0 * m->K.value(), TermKind::Fbm, m->K, m->K});
        terms.push_back({m->a * m->b, m->H.value() + m->K.value(), TermKind::CcmCross, m->H, m->K});
    } else if (const auto* m = std::get_if<IntegratedMixedIndependent>(&v)) {
        terms.push_back({m->a * m->a, 2.0 + 2.0 * m->H.value(), TermKind::Ifbm, m->H, m->H});
        terms.push_back({m->b * m->b, 2.0 + 2.0 * m->K.value(), TermKind::Ifbm, m->K, m->K});
    } else if (const auto* m = std::get_if<IntegratedMixedCorrelated>(&v)) {
        terms.push_back({m->a * m->a, 2.0 + 2.0 * m->H.value(), TermKind::Ifbm, m->H, m->H});
        terms.push_back({m->b * m->b, 2.0 + 2.0 * m->K.value(), TermKind::Ifbm, m->K, m->K});
        terms.push_back(
            {m->a * m->b, 2.0 + m->H.value() + m->K.value(), TermKind::IccmCross, m->H, m->K});
    } else if (const auto* m = std::get_if<MixedRiemannLiouville>(&v)) {
        terms.push_back({m->a * m->a, 2.0 * m->H.value(), TermKind::Rl, m->H, m->H});
        terms.push_back({m->b * m->b, 2.0 * m->K.value(), TermKind::Rl, m->K, m->K});
    }
    return terms;
}

double eval_term(const CovTerm& term, double s, double t, const QuadratureConfig& q) {
    switch (term.kind) {
        case TermKind::Min: return std::min(s, t);
        case TermKind::Fbm: return fbm_cov(term.H, s, t);
        case TermKind::Rl: return rl_cov(term.H, s, t, q);
        case TermKind::Ifbm: return ifbm_cov(term.H, s, t);
        case TermKind::CcmCross: return ccm_cross(term.H, term.K, s, t, q);
        case TermKind::IccmCross: return integrated_ccm_cross(term.H, term.K, s, t, q);
    }
    return 0.0;
}

double sum_terms(const std::vector<CovTerm>& terms, double s, double t, const QuadratureConfig& q) {
    double total = 0.0;
    for (const auto& term : terms) total += term.coeff * eval_term(term, s, t, q);
    return total;
}

// Integral over v in (r,T) of K_P(v,r). Swapping the order with the kernel's inner integral
// leaves one quadrature with weight (T-u); u = r + w^{1/p} as in the kernel itself.
double kernel_time_integral(HurstParam P, double T, double r, const QuadratureConfig& cfg) {
    const double h = P.value();
    const double c = normalizing_constant(P);
    const double span = T - r;
    if (h > 0.5) {
        const double beta = h - 0.5;
        const double inv = 1.0 / beta;
        auto f = [&](double w) {
            const double d = std::pow(w, inv);
            return std::pow(r + d, beta) * (span - d);
        };
        const double integral = inv * integrate_with_log_tail(f, std::pow(span, beta), std::pow(r, beta), cfg,
                                                              "integrated_ccm_cross");
        return c / std::tgamma(beta) * std::pow(r, -beta) * integral;
    }
    const double p = h + 0.5;
    const double inv = 1.0 / p;
    auto f = [&](double w) {
        const double d = std::pow(w, inv);
        const double u = r + d;
        return std::pow(u, h - 0.5) + (0.5 - h) * std::pow(u, h - 1.5) * (span - d);
    };
    const double integral =
        inv * integrate_with_log_tail(f, std::pow(span, p), std::pow(r, p), cfg, "integrated_ccm_cross");
    return c / std::tgamma(h + 0.5) * std::pow(r, 0.5 - h) * integral;
}

}  // namespace

double fbm_cov(HurstParam H, double s, double t) {
    require_fbm_range(H, "fbm_cov");
    require_times(s, t, "fbm_cov");
    const double lo = std::min(s, t);
    const double hi = std::max(s, t);
    if (lo == 0.0) return 0.0;
    const double h2 = 2.0 * H.value();
    if (lo == hi) return std::pow(hi, h2);
    return 0.5 * (std::pow(hi, h2) + std::pow(lo, h2) - std::pow(hi - lo, h2));
}

double normalizing_constant(HurstParam H) {
    require_fbm_range(H, "normalizing_constant");
    const double h = H.value();
    return std::sqrt(2.0 * h * std::tgamma(1.5 - h) * std::tgamma(h + 0.5) / std::tgamma(2.0 - 2.0 * h));
}

double molchan_golosov_kernel(HurstParam H, double t, double s, const QuadratureConfig& q) {
    require_fbm_range(H, "molchan_golosov_kernel");
    if (!(s > 0.0) || !(t > s) || !std::isfinite(t)) {
        throw std::domain_error("molchan_golosov_kernel: requires 0 < s < t");
    }
    const double h = H.value();
    if (h == 0.5) return 1.0;
    const QuadratureConfig inner = inner_config(q);
    const double c = normalizing_constant(H);
    if (h > 0.5) {
        const double beta = h - 0.5;
        const double inv = 1.0 / beta;
        // u = s + w^{1/beta}: u^beta (u-s)^{beta-1} du = u^beta / beta dw
        auto f = [&](double w) { return std::pow(s + std::pow(w, inv), beta); };
        const double W = std::pow(t - s, beta);
        const double integral = inv * integrate_with_log_tail(f, W, std::pow(s, beta), inner, "molchan_golosov_kernel");
        return c / std::tgamma(beta) * std::pow(s, -beta) * integral;
    }
    const double beta = h + 0.5;
    const double inv = 1.0 / beta;
    // u = s + w^{1/beta}: u^{H-3/2} (u-s)^{H-1/2} du = u^{H-3/2} / beta dw
    auto f = [&](double w) { return std::pow(s + std::pow(w, inv), h - 1.5); };
    const double W = std::pow(t - s, beta);
    const double integral = inv * integrate_with_log_tail(f, W, std::pow(s, beta), inner, "molchan_golosov_kernel");
    const double boundary = std::pow(t * (t - s) / s, h - 0.5);
    return c / std::tgamma(h + 0.5) * (boundary + (0.5 - h) * std::pow(s, 0.5 - h) * integral);
}

double kernel_product_integral(HurstParam H, HurstParam K, double t1, double t2, double upper,
                               const QuadratureConfig& q) {
    require_fbm_range(H, "kernel_product_integral");
    require_fbm_range(K, "kernel_product_integral");
    if (!(upper >= 0.0) || upper > std::min(t1, t2)) {
        throw std::domain_error("kernel_product_integral: requires 0 <= upper <= min(t1, t2)");
    }
    if (upper == 0.0) return 0.0;
    const double dh = H.value() - 0.5;
    const double dk = K.value() - 0.5;
    auto kernel = [&](HurstParam P, double t, double u) {
        return P.value() == 0.5 ? 1.0 : molchan_golosov_kernel(P, t, u, q);
    };
    auto f = [&](double u) {
        if (!(u > 0.0) || !(u < upper)) return 0.0;
        return kernel(H, t1, u) * kernel(K, t2, u);
    };
    const double alpha_left = -dh - dk;
    double alpha_right = 0.0;
    if (t1 == upper) alpha_right += dh;
    if (t2 == upper) alpha_right += dk;
    return integrate_power_singular(f, 0.0, upper, alpha_left, alpha_right, q, "kernel_product_integral");
}

double ccm_cross(HurstParam H, HurstParam K, double s, double t, const QuadratureConfig& q) {
    require_fbm_range(H, "ccm_cross");
    require_fbm_range(K, "ccm_cross");
    require_times(s, t, "ccm_cross");
    const double lo = std::min(s, t);
    const double hi = std::max(s, t);
    if (lo == 0.0) return 0.0;
    const double h = H.value();
    const double k = K.value();
    if (h == 0.5 && k == 0.5) return 2.0 * lo;
    auto kernel = [&](HurstParam P, double at, double u) {
        return P.value() == 0.5 ? 1.0 : molchan_golosov_kernel(P, at, u, q);
    };
    if (lo == hi) {
        auto f = [&](double u) {
            if (!(u > 0.0) || !(u < lo)) return 0.0;
            return kernel(H, lo, u) * kernel(K, lo, u);
        };
        return 2.0 * integrate_power_singular(f, 0.0, lo, 1.0 - h - k,
                                              (h - 0.5) + (k - 0.5), q, "ccm_cross");
    }
    // Both products share the nodes; at u -> lo the singular factors are K_K(lo,u) and K_H(lo,u).
    auto f = [&](double u) {
        if (!(u > 0.0) || !(u < lo)) return 0.0;
        return kernel(H, hi, u) * kernel(K, lo, u) + kernel(H, lo, u) * kernel(K, hi, u);
    };
    const double alpha_left = 1.0 - h - k;
    const double alpha_right = std::min(h, k) - 0.5;
    return integrate_power_singular(f, 0.0, lo, alpha_left, alpha_right, q, "ccm_cross");
}

double ccm_cov(double a, double b, HurstParam H, HurstParam K, double s, double t, const QuadratureConfig& q) {
    ProcessSpec spec(MixedCorrelated{{a, H, b, K}});
    spec.validate();
    require_times(s, t, "ccm_cov");
    const double lo = std::min(s, t);
    const double hi = std::max(s, t);
    if (lo == 0.0) return 0.0;
    return a * a * fbm_cov(H, lo, hi) + b * b * fbm_cov(K, lo, hi) + a * b * ccm_cross(H, K, lo, hi, q);
}

double rl_cov(HurstParam H, double s, double t, const QuadratureConfig& q) {
    require_positive(H, "rl_cov");
    require_times(s, t, "rl_cov");
    const double lo = std::min(s, t);
    const double hi = std::max(s, t);
    if (lo == 0.0) return 0.0;
    const double h = H.value();
    if (lo == hi) return std::pow(hi, 2.0 * h) / (2.0 * h);
    const double beta = h - 0.5;
    if (beta == 0.0) return lo;
    const double d = hi - lo;
    // v = lo - u: integral over (0, lo) of (d + v)^beta v^beta.
    auto f = [&](double v) { return std::pow((d + v) * v, beta); };
    const double split = std::min(d, lo);
    double head;
    if (beta < 0.0) {
        auto g = [&](double w) {
            // v = w^{1/(1+beta)}
            if (w <= 0.0) return 0.0;
            const double inv = 1.0 / (1.0 + beta);
            const double v = std::pow(w, inv);
            return std::pow(d + v, beta) * inv;
        };
        head = integrate(g, 0.0, std::pow(split, 1.0 + beta), q, "rl_cov");
    } else {
        head = integrate(f, 0.0, split, q, "rl_cov");
    }
    if (split >= lo) return head;
    auto tail = [&](double y) {
        const double v = std::exp(y);
        return f(v) * v;
    };
    return head + integrate(tail, std::log(split), std::log(lo), q, "rl_cov");
}

double ifbm_cov(HurstParam H, double s, double t) {
    require_fbm_range(H, "ifbm_cov");
    require_times(s, t, "ifbm_cov");
    const double lo = std::min(s, t);
    const double hi = std::max(s, t);
    if (lo == 0.0) return 0.0;
    const double q1 = 2.0 * H.value() + 1.0;
    const double q = q1 + 1.0;
    const double x = lo / hi;
    // cov = hi^q * f(x), f(x) = 1/2 [x^{q1}/q1 - x^q/(q1 q) + ((1-x)^q - 1 + q x)/(q1 q)]
    const double fx = 0.5 * (std::pow(x, q1) / q1 - std::pow(x, q) / (q1 * q) + convex_remainder(q, x) / (q1 * q));
    return std::pow(hi, q) * fx;
}

double integrated_ccm_cross(HurstParam H, HurstParam K, double s, double t, const QuadratureConfig& q) {
    require_fbm_range(H, "integrated_ccm_cross");
    require_fbm_range(K, "integrated_ccm_cross");
    require_times(s, t, "integrated_ccm_cross");
    const double lo = std::min(s, t);
    const double hi = std::max(s, t);
    if (lo == 0.0) return 0.0;
    QuadratureConfig cfg = q;
    cfg.rel_tol = std::max(q.rel_tol, 1e-10);
    cfg.abs_tol = 1e-300;
    // Fubini: the double integral of the cross term equals the integral over r < lo of
    // J_H(hi,r) J_K(lo,r) + J_H(lo,r) J_K(hi,r), with J_P(T,r) = integral over (r,T) of K_P(v,r).
    auto J = [&](HurstParam P, double T, double r) {
        if (!(r < T)) return 0.0;
        if (P.value() == 0.5) return T - r;
        return kernel_time_integral(P, T, r, cfg);
    };
    auto f = [&](double r) {
        if (!(r > 0.0) || !(r < lo)) return 0.0;
        const double a = J(H, hi, r) * J(K, lo, r);
        return lo == hi ? 2.0 * a : a + J(H, lo, r) * J(K, hi, r);
    };
    const double alpha_left = 1.0 - H.value() - K.value();
    return integrate_power_singular(f, 0.0, lo, alpha_left, 0.0, cfg, "integrated_ccm_cross");
}

double mixed_cov(const ProcessSpec& spec, double s, double t, const QuadratureConfig& q) {
    require_times(s, t, "mixed_cov");
    const auto terms = covariance_terms(spec);
    const double lo = std::min(s, t);
    const double hi = std::max(s, t);
    if (lo == 0.0) return 0.0;
    return sum_terms(terms, lo, hi, q);
}

double lamperti_autocov(const ProcessSpec& spec, double tau, const QuadratureConfig& q) {
    if (spec.is_mixed()) {
        throw std::domain_error("lamperti_autocov: mixed processes are not self-similar");
    }
    spec.validate();
    const double a = std::abs(tau);
    if (std::holds_alternative<BrownianMotion>(spec.variant())) return std::exp(-0.5 * a);
    if (const auto* f = std::get_if<FractionalBM>(&spec.variant())) {
        const double h = f->H.value();
        // 1/2 (e^{H tau} + e^{-H tau} - |e^{tau/2} - e^{-tau/2}|^{2H}), with the e^{H tau} parts
        // combined as -e^{H tau} expm1(2H log1p(-e^{-tau})).
        if (a == 0.0) return 1.0;
        return 0.5 * (std::exp(-h * a) - std::exp(h * a) * std::expm1(2.0 * h * std::log1p(-std::exp(-a))));
    }
    return mixed_cov(spec, std::exp(-0.5 * a), std::exp(0.5 * a), q);
}

double CovarianceMatrix::max_diagonal() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m = std::max(m, (*this)(i, i));
    return m;
}

std::vector<double> assemble_covariance(const ProcessSpec& spec, const TimeGrid& grid, const QuadratureConfig& q,
                                        unsigned threads) {
    const auto terms = covariance_terms(spec);
    const std::size_t n = grid.size();
    const std::size_t p0 = grid.first_positive();
    std::vector<double> entries(n * n, 0.0);
    const auto t = grid.times();

    const double log_step = grid.log_step();
    const bool use_lags = log_step > 0.0;
    const std::size_t np = n - p0;

    // Per-term lag tables g_k = c(e^{-k step}, 1) for quadrature terms on log grids.
    std::vector<std::vector<double>> lag_tables(terms.size());
    if (use_lags) {
        for (std::size_t ti = 0; ti < terms.size(); ++ti) {
            if (!is_quadrature_term(terms[ti].kind)) continue;
            auto& table = lag_tables[ti];
            table.assign(np, 0.0);
            parallel_for(np, threads, [&](std::size_t k) {
                const double rho = k == 0 ? 1.0 : std::exp(-log_step * static_cast<double>(k));
                table[k] = eval_term(terms[ti], rho, 1.0, q);
            });
        }
    }

    parallel_for(np, threads, [&](std::size_t row) {
        const std::size_t i = p0 + row;
        for (std::size_t j = i; j < n; ++j) {
            double value = 0.0;
            for (std::size_t ti = 0; ti < terms.size(); ++ti) {
                const auto& term = terms[ti];
                double c;
                if (use_lags && !lag_tables[ti].empty()) {
                    c = std::pow(t[j], term.degree) * lag_tables[ti][j - i];
                } else {
                    c = eval_term(term, t[i], t[j], q);
                }
                value += term.coeff * c;
            }
            entries[i * n + j] = value;
            entries[j * n + i] = value;
        }
    });
    return entries;
}

void certify_psd(CovarianceMatrix& cov) {
    const std::size_t n = cov.size();
    const std::size_t p0 = cov.grid.first_positive();
    const std::size_t m = n - p0;
    const double max_diag = cov.max_diagonal();

    std::vector<double> sub(m * m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) sub[i * m + j] = cov.entries[(p0 + i) * n + (p0 + j)];
    }

    double jitter = 0.0;
    std::vector<double> work;
    bool ok = false;
    for (int attempt = 0; attempt <= 7; ++attempt) {
        jitter = attempt == 0 ? 0.0 : max_diag * 1e-17 * std::pow(10.0, attempt);
        work = sub;
        for (std::size_t i = 0; i < m; ++i) work[i * m + i] += jitter;
        if (cholesky_lower_inplace(work, m)) {
            ok = true;
            break;
        }
    }
    if (!ok) {
        const double lam = smallest_eigenvalue(sub, m);
        throw PsdFailure("cov_matrix(" + cov.spec_descriptor + "): not PSD within jitter " +
                             format_double(kJitterCap) + " x max diagonal; smallest eigenvalue " +
                             format_double(lam),
                         lam);
    }
    cov.jitter_applied = jitter;
    cov.factor.assign(n * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= i; ++j) cov.factor[(p0 + i) * n + (p0 + j)] = work[i * m + j];
    }
}

CovarianceMatrix cov_matrix(const ProcessSpec& spec, const TimeGrid& grid, const QuadratureConfig& q,
                            unsigned threads) {
    CovarianceMatrix cov{spec.descriptor(), grid, assemble_covariance(spec, grid, q, threads), 0.0, {}};
    certify_psd(cov);
    return cov;
}

}  // namespace mixpersist
