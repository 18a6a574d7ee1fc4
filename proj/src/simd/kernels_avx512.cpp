#include <immintrin.h>

#include <algorithm>

#include "mixpersist/simd/kernels.hpp"

namespace mixpersist::simd::avx512 {

namespace {

// 8 rows x 24 columns: 24 zmm accumulators, 3 loads and 8 broadcasts per k.
inline void tile_8x24(const double* lp, std::size_t k0, std::size_t k1, const double* Z, std::size_t ld,
                      double* X, bool first_slab) {
    __m512d acc[8][3];
    for (auto& row : acc)
        for (auto& a : row) a = _mm512_setzero_pd();
    for (std::size_t k = k0; k < k1; ++k) {
        const double* zk = Z + k * ld;
        const __m512d z0 = _mm512_loadu_pd(zk);
        const __m512d z1 = _mm512_loadu_pd(zk + 8);
        const __m512d z2 = _mm512_loadu_pd(zk + 16);
        const double* l = lp + k * kPanelRows;
        for (int r = 0; r < 8; ++r) {
            const __m512d b = _mm512_set1_pd(l[r]);
            acc[r][0] = _mm512_fmadd_pd(b, z0, acc[r][0]);
            acc[r][1] = _mm512_fmadd_pd(b, z1, acc[r][1]);
            acc[r][2] = _mm512_fmadd_pd(b, z2, acc[r][2]);
        }
    }
    for (int r = 0; r < 8; ++r) {
        double* x = X + r * ld;
        for (int c = 0; c < 3; ++c) {
            __m512d v = acc[r][c];
            if (!first_slab) v = _mm512_add_pd(_mm512_loadu_pd(x + 8 * c), v);
            _mm512_storeu_pd(x + 8 * c, v);
        }
    }
}

inline void tile_8x8(const double* lp, std::size_t k0, std::size_t k1, const double* Z, std::size_t ld, double* X,
                     bool first_slab) {
    __m512d acc[8];
    for (auto& a : acc) a = _mm512_setzero_pd();
    for (std::size_t k = k0; k < k1; ++k) {
        const __m512d z = _mm512_loadu_pd(Z + k * ld);
        const double* l = lp + k * kPanelRows;
        for (int r = 0; r < 8; ++r) acc[r] = _mm512_fmadd_pd(_mm512_set1_pd(l[r]), z, acc[r]);
    }
    for (int r = 0; r < 8; ++r) {
        __m512d v = acc[r];
        if (!first_slab) v = _mm512_add_pd(_mm512_loadu_pd(X + r * ld), v);
        _mm512_storeu_pd(X + r * ld, v);
    }
}

}  // namespace

void trmm(const PackedLower& L, const double* Z, double* X, std::size_t ld) {
    const std::size_t m = L.m;
    for (std::size_t k0 = 0; k0 < m; k0 += kSlab) {
        const bool first_slab = k0 == 0;
        for (std::size_t p = k0 / kPanelRows; p < L.panels(); ++p) {
            const std::size_t k1 = std::min(k0 + kSlab, L.k_end(p));
            const double* lp = L.data.data() + L.offset[p];
            double* xp = X + p * kPanelRows * ld;
            std::size_t j = 0;
            for (; j + 24 <= ld; j += 24) tile_8x24(lp, k0, k1, Z + j, ld, xp + j, first_slab);
            for (; j < ld; j += 8) tile_8x8(lp, k0, k1, Z + j, ld, xp + j, first_slab);
        }
    }
}

void first_exceedance(const ScanInput& in, const double* limit, std::size_t rows, std::size_t ld,
                      std::size_t ncols, bool two_sided, std::uint32_t row_base, std::uint32_t* first) {
    const __m512d w0 = _mm512_set1_pd(in.w0);
    const __m512d w1 = _mm512_set1_pd(in.w1);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* a = in.x0 + r * ld;
        const double* b = in.x1 ? in.x1 + r * ld : nullptr;
        const __m512d lim = _mm512_set1_pd(limit[r]);
        const auto idx = static_cast<std::uint32_t>(row_base + r);
        for (std::size_t j = 0; j < ncols; j += 8) {
            __m512d v = b ? _mm512_fmadd_pd(w0, _mm512_loadu_pd(a + j), _mm512_mul_pd(w1, _mm512_loadu_pd(b + j)))
                          : _mm512_mul_pd(w0, _mm512_loadu_pd(a + j));
            if (two_sided) v = _mm512_abs_pd(v);
            const __mmask8 hit = _mm512_cmp_pd_mask(v, lim, _CMP_GT_OQ);
            if (hit == 0) continue;
            for (int q = 0; q < 8; ++q) {
                if ((hit >> q) & 1) first[j + q] = std::min(first[j + q], idx);
            }
        }
    }
}

}  // namespace mixpersist::simd::avx512
