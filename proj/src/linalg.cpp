#include "mixpersist/linalg.hpp"

#include <lapacke.h>

#include <limits>
#include <stdexcept>

namespace mixpersist {

bool cholesky_lower_inplace(std::vector<double>& a, std::size_t m) {
    if (m == 0) return true;
    const auto n = static_cast<lapack_int>(m);
    const lapack_int info = LAPACKE_dpotrf(LAPACK_ROW_MAJOR, 'L', n, a.data(), n);
    if (info != 0) return false;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) a[i * m + j] = 0.0;
    }
    return true;
}

double smallest_eigenvalue(const std::vector<double>& a, std::size_t m) {
    if (m == 0) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> work = a;
    const auto n = static_cast<lapack_int>(m);
    lapack_int found = 0;
    double w[1];
    double z[1];
    std::vector<lapack_int> isuppz(2);
    const lapack_int info = LAPACKE_dsyevr(LAPACK_ROW_MAJOR, 'N', 'I', 'L', n, work.data(), n, 0.0, 0.0, 1, 1,
                                           0.0, &found, w, z, 1, isuppz.data());
    if (info != 0 || found < 1) throw std::runtime_error("smallest_eigenvalue: dsyevr failed");
    return w[0];
}

}  // namespace mixpersist
