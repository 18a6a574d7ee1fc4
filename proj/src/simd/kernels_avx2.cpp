#include <immintrin.h>

#include <algorithm>

#include "mixpersist/simd/kernels.hpp"

namespace mixpersist::simd::avx2 {

namespace {

// 4 rows x 12 columns: 12 accumulators, 3 loads and one broadcast per k.
inline void tile_4x12(const double* lp, std::size_t k0, std::size_t k1, const double* Z, std::size_t ld,
                      double* X, bool first_slab) {
    __m256d acc[4][3];
    for (auto& row : acc)
        for (auto& a : row) a = _mm256_setzero_pd();
    for (std::size_t k = k0; k < k1; ++k) {
        const double* zk = Z + k * ld;
        const __m256d z0 = _mm256_loadu_pd(zk);
        const __m256d z1 = _mm256_loadu_pd(zk + 4);
        const __m256d z2 = _mm256_loadu_pd(zk + 8);
        const double* l = lp + k * kPanelRows;
        for (int r = 0; r < 4; ++r) {
            const __m256d b = _mm256_broadcast_sd(l + r);
            acc[r][0] = _mm256_fmadd_pd(b, z0, acc[r][0]);
            acc[r][1] = _mm256_fmadd_pd(b, z1, acc[r][1]);
            acc[r][2] = _mm256_fmadd_pd(b, z2, acc[r][2]);
        }
    }
    for (int r = 0; r < 4; ++r) {
        double* x = X + r * ld;
        for (int c = 0; c < 3; ++c) {
            __m256d v = acc[r][c];
            if (!first_slab) v = _mm256_add_pd(_mm256_loadu_pd(x + 4 * c), v);
            _mm256_storeu_pd(x + 4 * c, v);
        }
    }
}

inline void tile_4x4(const double* lp, std::size_t k0, std::size_t k1, const double* Z, std::size_t ld, double* X,
                     bool first_slab) {
    __m256d acc[4] = {_mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd()};
    for (std::size_t k = k0; k < k1; ++k) {
        const __m256d z = _mm256_loadu_pd(Z + k * ld);
        const double* l = lp + k * kPanelRows;
        for (int r = 0; r < 4; ++r) acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(l + r), z, acc[r]);
    }
    for (int r = 0; r < 4; ++r) {
        __m256d v = acc[r];
        if (!first_slab) v = _mm256_add_pd(_mm256_loadu_pd(X + r * ld), v);
        _mm256_storeu_pd(X + r * ld, v);
    }
}

}  // namespace

void trmm(const PackedLower& L, const double* Z, double* X, std::size_t ld) {
    const std::size_t m = L.m;
    for (std::size_t k0 = 0; k0 < m; k0 += kSlab) {
        const bool first_slab = k0 == 0;
        for (std::size_t p = k0 / kPanelRows; p < L.panels(); ++p) {
            const std::size_t k1 = std::min(k0 + kSlab, L.k_end(p));
            for (std::size_t half = 0; half < 2; ++half) {
                const double* lp = L.data.data() + L.offset[p] + 4 * half;
                double* xp = X + (p * kPanelRows + 4 * half) * ld;
                std::size_t j = 0;
                for (; j + 12 <= ld; j += 12) tile_4x12(lp, k0, k1, Z + j, ld, xp + j, first_slab);
                for (; j < ld; j += 4) tile_4x4(lp, k0, k1, Z + j, ld, xp + j, first_slab);
            }
        }
    }
}

void first_exceedance(const ScanInput& in, const double* limit, std::size_t rows, std::size_t ld,
                      std::size_t ncols, bool two_sided, std::uint32_t row_base, std::uint32_t* first) {
    const __m256d w0 = _mm256_set1_pd(in.w0);
    const __m256d w1 = _mm256_set1_pd(in.w1);
    const __m256d sign = _mm256_set1_pd(-0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* a = in.x0 + r * ld;
        const double* b = in.x1 ? in.x1 + r * ld : nullptr;
        const __m256d lim = _mm256_set1_pd(limit[r]);
        const auto idx = static_cast<std::uint32_t>(row_base + r);
        for (std::size_t j = 0; j < ncols; j += 4) {
            __m256d v = b ? _mm256_fmadd_pd(w0, _mm256_loadu_pd(a + j), _mm256_mul_pd(w1, _mm256_loadu_pd(b + j)))
                          : _mm256_mul_pd(w0, _mm256_loadu_pd(a + j));
            if (two_sided) v = _mm256_andnot_pd(sign, v);
            const int mask = _mm256_movemask_pd(_mm256_cmp_pd(v, lim, _CMP_GT_OQ));
            if (mask == 0) continue;
            for (int q = 0; q < 4; ++q) {
                if ((mask >> q) & 1) first[j + q] = std::min(first[j + q], idx);
            }
        }
    }
}

}  // namespace mixpersist::simd::avx2
