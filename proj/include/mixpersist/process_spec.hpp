#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mixpersist {

/// Self-similarity index of a single Gaussian component.
///
/// Construction does not validate; the range depends on the family
/// (FBM needs (0,1), Riemann-Liouville needs (0,inf)), so each consumer
/// checks with `require_fbm_range` or `require_positive`.
class HurstParam {
public:
    constexpr explicit HurstParam(double value) : value_(value) {}
    [[nodiscard]] constexpr double value() const { return value_; }

    friend constexpr bool operator==(HurstParam, HurstParam) = default;

private:
    double value_;
};

/// Throws std::domain_error unless H lies in the open interval (0,1).
void require_fbm_range(HurstParam H, std::string_view who);
/// Throws std::domain_error unless H > 0.
void require_positive(HurstParam H, std::string_view who);

struct BrownianMotion {
    friend bool operator==(const BrownianMotion&, const BrownianMotion&) = default;
};
struct FractionalBM {
    HurstParam H;
    friend bool operator==(const FractionalBM&, const FractionalBM&) = default;
};
struct RiemannLiouville {
    HurstParam H;
    friend bool operator==(const RiemannLiouville&, const RiemannLiouville&) = default;
};
struct IntegratedFBM {
    HurstParam H;
    friend bool operator==(const IntegratedFBM&, const IntegratedFBM&) = default;
};

/// a*X^H + b*X^K with K < H. What X is depends on the tag.
struct MixedParams {
    double a;
    HurstParam H;
    double b;
    HurstParam K;
    friend bool operator==(const MixedParams&, const MixedParams&) = default;
};

/// a B^H + b B^K, independent FBMs.
struct MixedIndependent : MixedParams {};
/// a B^H + b B^K, both driven by one Brownian motion through Molchan-Golosov kernels.
struct MixedCorrelated : MixedParams {};
/// a I^H + b I^K with independent underlying FBMs.
struct IntegratedMixedIndependent : MixedParams {};
/// Time integral of MixedCorrelated.
struct IntegratedMixedCorrelated : MixedParams {};
/// a R^H + b R^K with independent driving Brownian motions.
struct MixedRiemannLiouville : MixedParams {};

using ProcessVariant =
    std::variant<BrownianMotion, FractionalBM, RiemannLiouville, IntegratedFBM, MixedIndependent,
                 MixedCorrelated, IntegratedMixedIndependent, IntegratedMixedCorrelated,
                 MixedRiemannLiouville>;

class ProcessSpec;

/// One independently sampled Gaussian piece of a spec and its weight.
struct WeightedComponent {
    double weight;
    ProcessVariant process;
};

class ProcessSpec {
public:
    ProcessSpec(ProcessVariant v);  // NOLINT(google-explicit-constructor)

    static ProcessSpec brownian() { return {BrownianMotion{}}; }
    static ProcessSpec fbm(double H) { return {FractionalBM{HurstParam(H)}}; }
    static ProcessSpec riemann_liouville(double H) { return {RiemannLiouville{HurstParam(H)}}; }
    static ProcessSpec integrated_fbm(double H) { return {IntegratedFBM{HurstParam(H)}}; }
    static ProcessSpec mixed_independent(double a, double H, double b, double K);
    static ProcessSpec mixed_correlated(double a, double H, double b, double K);
    static ProcessSpec integrated_mixed_independent(double a, double H, double b, double K);
    static ProcessSpec integrated_mixed_correlated(double a, double H, double b, double K);
    static ProcessSpec mixed_riemann_liouville(double a, double H, double b, double K);

    [[nodiscard]] const ProcessVariant& variant() const { return v_; }

    /// Checks parameter ranges; throws std::domain_error.
    void validate() const;

    [[nodiscard]] bool is_mixed() const;
    [[nodiscard]] bool is_self_similar() const { return !is_mixed(); }
    [[nodiscard]] bool is_integrated() const;

    /// H for FBM/RL/mixed, 1+H for integrated variants, 1/2 for BM.
    [[nodiscard]] double dominant_index() const;
    /// Index of the lower-order part of a mixed spec; equals dominant_index for pure specs.
    [[nodiscard]] double secondary_index() const;

    /// True only for MixedCorrelated / IntegratedMixedCorrelated with a*b > 0, where the
    /// non-negative covariance hypothesis holds. Always true for the other variants.
    [[nodiscard]] bool nonnegative_covariance_expected() const;

    /// Decomposition into independent pieces. Correlated mixtures stay a single piece
    /// because they must be sampled as one Gaussian vector.
    [[nodiscard]] std::vector<WeightedComponent> independent_components() const;

    /// Canonical text form, e.g. `fbm(H=0.75)` or `mixed_fbm(a=1,H=0.75,b=1,K=0.5)`.
    [[nodiscard]] std::string descriptor() const;

    friend bool operator==(const ProcessSpec&, const ProcessSpec&) = default;

private:
    ProcessVariant v_;
};

/// Inverse of ProcessSpec::descriptor. Whitespace is ignored; the result is validated.
[[nodiscard]] ProcessSpec parse_spec(std::string_view text);

/// Shortest decimal that round-trips the double.
[[nodiscard]] std::string format_double(double x);

}  // namespace mixpersist
