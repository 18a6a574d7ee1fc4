#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace mixpersist {

/// n points t_k = k * t_max / n, k = 1..n.
struct UniformPolicy {
    double t_max;
    std::size_t n;
    friend bool operator==(const UniformPolicy&, const UniformPolicy&) = default;
};

/// n points with constant log-spacing from t_min to t_max inclusive.
struct LampertiLogPolicy {
    double t_min;
    double t_max;
    std::size_t n;
    friend bool operator==(const LampertiLogPolicy&, const LampertiLogPolicy&) = default;
};

/// Caller-provided positive times.
struct ExplicitPolicy {
    friend bool operator==(const ExplicitPolicy&, const ExplicitPolicy&) = default;
};

using GridPolicy = std::variant<UniformPolicy, LampertiLogPolicy, ExplicitPolicy>;

/// Strictly increasing evaluation times. An optional leading 0 marks the origin,
/// where every process is pinned to 0.
class TimeGrid {
public:
    static TimeGrid uniform(double t_max, std::size_t n, bool include_origin = true);
    static TimeGrid lamperti_log(double t_min, double t_max, std::size_t n, bool include_origin = true);
    /// `times` must be strictly increasing and positive, except for an optional leading 0.
    static TimeGrid explicit_times(std::vector<double> times);
    static TimeGrid from_policy(const GridPolicy& policy, bool include_origin = true);

    [[nodiscard]] std::span<const double> times() const { return times_; }
    [[nodiscard]] std::size_t size() const { return times_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return times_[i]; }
    [[nodiscard]] const GridPolicy& policy() const { return policy_; }
    [[nodiscard]] bool includes_origin() const { return includes_origin_; }
    /// Index of the first strictly positive time (1 with origin, else 0).
    [[nodiscard]] std::size_t first_positive() const { return includes_origin_ ? 1 : 0; }

    /// Number of grid points with t <= T (origin included).
    [[nodiscard]] std::size_t count_up_to(double T) const;

    /// Constant log step of a LampertiLog grid; 0 for other policies.
    [[nodiscard]] double log_step() const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    TimeGrid(std::vector<double> times, GridPolicy policy, bool origin);

    std::vector<double> times_;
    GridPolicy policy_;
    bool includes_origin_;
};

}  // namespace mixpersist
