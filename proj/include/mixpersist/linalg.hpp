#pragma once

#include <cstddef>
#include <vector>

namespace mixpersist {

/// In-place lower Cholesky of a row-major m x m symmetric matrix. On success the strict upper
/// triangle is zeroed and true is returned; on failure the contents are unspecified.
bool cholesky_lower_inplace(std::vector<double>& a, std::size_t m);

/// Smallest eigenvalue of a row-major symmetric matrix (LAPACK dsyevr, lower triangle read).
double smallest_eigenvalue(const std::vector<double>& a, std::size_t m);

}  // namespace mixpersist
