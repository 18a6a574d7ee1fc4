#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mixpersist::simd {

enum class Isa { Scalar, Avx2, Avx512 };

/// Best ISA the CPU supports.
Isa detect_isa();
/// detect_isa() unless MIXPERSIST_SIMD=scalar|avx2|avx512 asks for something (supported) else.
Isa active_isa();
bool isa_supported(Isa isa);
const char* isa_name(Isa isa);

/// Rows per panel of the packed factor; X buffers are padded to a multiple of this.
inline constexpr std::size_t kPanelRows = 8;
/// Columns are processed in multiples of this.
inline constexpr std::size_t kColumnQuantum = 8;
/// k-slab depth. Part of the arithmetic contract: all ISAs split the k sum at the same points.
inline constexpr std::size_t kSlab = 256;

/// Lower-triangular m x m factor repacked as 8-row panels, k-major within a panel:
/// element (8p + r, k) lives at data[offset[p] + 8k + r]; entries above the diagonal and rows
/// past m are stored as zeros.
struct PackedLower {
    std::size_t m = 0;
    std::vector<std::size_t> offset;
    std::vector<double> data;

    [[nodiscard]] std::size_t panels() const { return offset.size(); }
    [[nodiscard]] std::size_t padded_rows() const { return panels() * kPanelRows; }
    /// One past the last k stored for panel p.
    [[nodiscard]] std::size_t k_end(std::size_t p) const {
        return (p + 1) * kPanelRows < m ? (p + 1) * kPanelRows : m;
    }
};

/// `lower` is row-major m x m with leading dimension ld_lower.
PackedLower pack_lower(const double* lower, std::size_t m, std::size_t ld_lower);

/// X = L Z. Z is m x ld, X is padded_rows() x ld, both row-major; ld % kColumnQuantum == 0.
/// Per element: for each k-slab, acc = fma(L[i][k], Z[k][j], acc) in increasing k, then
/// X = acc for the first slab and X += acc for later ones. Every ISA performs exactly these
/// operations, so results agree bitwise.
void trmm(Isa isa, const PackedLower& L, const double* Z, double* X, std::size_t ld);

/// One or two weighted components feeding a barrier scan.
struct ScanInput {
    const double* x0 = nullptr;
    double w0 = 1.0;
    const double* x1 = nullptr;  // optional
    double w1 = 0.0;
};

/// For rows r in [0, rows): v = w0*x0 (or fma(w0, x0, w1*x1)); a column j exceeds at r when
/// v > limit[r] (two_sided: |v| > limit[r]). first[j] = min(first[j], row_base + r) over
/// exceeding rows. Matrices are row-major with leading dimension ld; ncols % 8 == 0.
void first_exceedance(Isa isa, const ScanInput& in, const double* limit, std::size_t rows, std::size_t ld,
                      std::size_t ncols, bool two_sided, std::uint32_t row_base, std::uint32_t* first);

namespace scalar {
void trmm(const PackedLower& L, const double* Z, double* X, std::size_t ld);
void first_exceedance(const ScanInput& in, const double* limit, std::size_t rows, std::size_t ld,
                      std::size_t ncols, bool two_sided, std::uint32_t row_base, std::uint32_t* first);
}  // namespace scalar
namespace avx2 {
void trmm(const PackedLower& L, const double* Z, double* X, std::size_t ld);
void first_exceedance(const ScanInput& in, const double* limit, std::size_t rows, std::size_t ld,
                      std::size_t ncols, bool two_sided, std::uint32_t row_base, std::uint32_t* first);
}  // namespace avx2
namespace avx512 {
void trmm(const PackedLower& L, const double* Z, double* X, std::size_t ld);
void first_exceedance(const ScanInput& in, const double* limit, std::size_t rows, std::size_t ld,
                      std::size_t ncols, bool two_sided, std::uint32_t row_base, std::uint32_t* first);
}  // namespace avx512

}  // namespace mixpersist::simd
