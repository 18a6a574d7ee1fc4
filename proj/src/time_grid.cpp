#include "mixpersist/time_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mixpersist {

TimeGrid::TimeGrid(std::vector<double> times, GridPolicy policy, bool origin)
    : times_(std::move(times)), policy_(policy), includes_origin_(origin) {}

TimeGrid TimeGrid::uniform(double t_max, std::size_t n, bool include_origin) {
    if (!(t_max > 0.0) || !std::isfinite(t_max) || n == 0) {
        throw std::invalid_argument("uniform grid: need t_max > 0 and n >= 1");
    }
    std::vector<double> t;
    t.reserve(n + 1);
    if (include_origin) t.push_back(0.0);
    const double dt = t_max / static_cast<double>(n);
    for (std::size_t k = 1; k <= n; ++k) t.push_back(dt * static_cast<double>(k));
    t.back() = t_max;
    return {std::move(t), UniformPolicy{t_max, n}, include_origin};
}

TimeGrid TimeGrid::lamperti_log(double t_min, double t_max, std::size_t n, bool include_origin) {
    if (!(t_min > 0.0) || !(t_max > t_min) || !std::isfinite(t_max) || n < 2) {
        throw std::invalid_argument("lamperti_log grid: need 0 < t_min < t_max and n >= 2");
    }
    std::vector<double> t;
    t.reserve(n + 1);
    if (include_origin) t.push_back(0.0);
    const double step = std::log(t_max / t_min) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) t.push_back(t_min * std::exp(step * static_cast<double>(k)));
    t[include_origin ? 1 : 0] = t_min;
    t.back() = t_max;
    return {std::move(t), LampertiLogPolicy{t_min, t_max, n}, include_origin};
}

TimeGrid TimeGrid::explicit_times(std::vector<double> times) {
    if (times.empty()) throw std::invalid_argument("explicit grid: no times");
    const bool origin = times.front() == 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || times[i] < 0.0 || (i > 0 && !(times[i] > times[i - 1]))) {
            throw std::invalid_argument("explicit grid: times must be finite, >= 0, strictly increasing");
        }
    }
    if (origin && times.size() == 1) throw std::invalid_argument("explicit grid: only the origin");
    return {std::move(times), ExplicitPolicy{}, origin};
}

TimeGrid TimeGrid::from_policy(const GridPolicy& policy, bool include_origin) {
    if (const auto* u = std::get_if<UniformPolicy>(&policy)) return uniform(u->t_max, u->n, include_origin);
    if (const auto* l = std::get_if<LampertiLogPolicy>(&policy)) {
        return lamperti_log(l->t_min, l->t_max, l->n, include_origin);
    }
    throw std::invalid_argument("from_policy: explicit grids carry their own times");
}

std::size_t TimeGrid::count_up_to(double T) const {
    return static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), T) - times_.begin());
}

double TimeGrid::log_step() const {
    if (const auto* l = std::get_if<LampertiLogPolicy>(&policy_)) {
        return std::log(l->t_max / l->t_min) / static_cast<double>(l->n - 1);
    }
    return 0.0;
}

}  // namespace mixpersist
