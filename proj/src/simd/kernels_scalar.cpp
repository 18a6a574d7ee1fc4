#include <algorithm>
#include <cmath>

#include "mixpersist/simd/kernels.hpp"

namespace mixpersist::simd::scalar {

void trmm(const PackedLower& L, const double* Z, double* X, std::size_t ld) {
    const std::size_t m = L.m;
    for (std::size_t k0 = 0; k0 < m; k0 += kSlab) {
        for (std::size_t p = k0 / kPanelRows; p < L.panels(); ++p) {
            const std::size_t k1 = std::min(k0 + kSlab, L.k_end(p));
            const double* panel = L.data.data() + L.offset[p];
            for (std::size_t r = 0; r < kPanelRows; ++r) {
                double* xrow = X + (p * kPanelRows + r) * ld;
                for (std::size_t j = 0; j < ld; ++j) {
                    double acc = 0.0;
                    for (std::size_t k = k0; k < k1; ++k) acc = std::fma(panel[k * kPanelRows + r], Z[k * ld + j], acc);
                    xrow[j] = k0 == 0 ? acc : xrow[j] + acc;
                }
            }
        }
    }
}

void first_exceedance(const ScanInput& in, const double* limit, std::size_t rows, std::size_t ld,
                      std::size_t ncols, bool two_sided, std::uint32_t row_base, std::uint32_t* first) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* a = in.x0 + r * ld;
        const double* b = in.x1 ? in.x1 + r * ld : nullptr;
        const auto idx = static_cast<std::uint32_t>(row_base + r);
        for (std::size_t j = 0; j < ncols; ++j) {
            double v = b ? std::fma(in.w0, a[j], in.w1 * b[j]) : in.w0 * a[j];
            if (two_sided) v = std::abs(v);
            if (v > limit[r] && idx < first[j]) first[j] = idx;
        }
    }
}

}  // namespace mixpersist::simd::scalar
