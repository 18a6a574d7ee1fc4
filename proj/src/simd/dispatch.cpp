#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mixpersist/simd/kernels.hpp"

namespace mixpersist::simd {

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2: return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
        case Isa::Avx512: return __builtin_cpu_supports("avx512f");
    }
    return false;
}

Isa detect_isa() {
    if (isa_supported(Isa::Avx512)) return Isa::Avx512;
    if (isa_supported(Isa::Avx2)) return Isa::Avx2;
    return Isa::Scalar;
}

Isa active_isa() {
    static const Isa chosen = [] {
        const char* env = std::getenv("MIXPERSIST_SIMD");
        if (env == nullptr) return detect_isa();
        const std::string_view v(env);
        Isa want = detect_isa();
        if (v == "scalar") want = Isa::Scalar;
        else if (v == "avx2") want = Isa::Avx2;
        else if (v == "avx512") want = Isa::Avx512;
        return isa_supported(want) ? want : detect_isa();
    }();
    return chosen;
}

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Avx512: return "avx512";
    }
    return "?";
}

PackedLower pack_lower(const double* lower, std::size_t m, std::size_t ld_lower) {
    PackedLower out;
    out.m = m;
    const std::size_t panels = (m + kPanelRows - 1) / kPanelRows;
    out.offset.resize(panels);
    std::size_t total = 0;
    for (std::size_t p = 0; p < panels; ++p) {
        out.offset[p] = total;
        total += out.k_end(p) * kPanelRows;
    }
    out.data.assign(total, 0.0);
    for (std::size_t p = 0; p < panels; ++p) {
        double* dst = out.data.data() + out.offset[p];
        for (std::size_t r = 0; r < kPanelRows; ++r) {
            const std::size_t i = p * kPanelRows + r;
            if (i >= m) break;
            for (std::size_t k = 0; k <= i; ++k) dst[k * kPanelRows + r] = lower[i * ld_lower + k];
        }
    }
    return out;
}

void trmm(Isa isa, const PackedLower& L, const double* Z, double* X, std::size_t ld) {
    if (ld % kColumnQuantum != 0) throw std::invalid_argument("trmm: ld must be a multiple of 8");
    if (!isa_supported(isa)) throw std::invalid_argument(std::string("trmm: unsupported ISA ") + isa_name(isa));
    switch (isa) {
        case Isa::Scalar: scalar::trmm(L, Z, X, ld); return;
        case Isa::Avx2: avx2::trmm(L, Z, X, ld); return;
        case Isa::Avx512: avx512::trmm(L, Z, X, ld); return;
    }
}

void first_exceedance(Isa isa, const ScanInput& in, const double* limit, std::size_t rows, std::size_t ld,
                      std::size_t ncols, bool two_sided, std::uint32_t row_base, std::uint32_t* first) {
    if (ncols % kColumnQuantum != 0) throw std::invalid_argument("first_exceedance: ncols must be a multiple of 8");
    if (!isa_supported(isa)) {
        throw std::invalid_argument(std::string("first_exceedance: unsupported ISA ") + isa_name(isa));
    }
    switch (isa) {
        case Isa::Scalar: scalar::first_exceedance(in, limit, rows, ld, ncols, two_sided, row_base, first); return;
        case Isa::Avx2: avx2::first_exceedance(in, limit, rows, ld, ncols, two_sided, row_base, first); return;
        case Isa::Avx512: avx512::first_exceedance(in, limit, rows, ld, ncols, two_sided, row_base, first); return;
    }
}

}  // namespace mixpersist::simd
