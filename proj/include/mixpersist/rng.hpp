#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>

namespace mixpersist {

/// Philox4x64-10 counter-based generator (Salmon et al. 2011). Stateless: the output is a pure
/// function of (counter, key).
struct Philox4x64 {
    using Counter = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    static constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;

    static Counter generate(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            const unsigned __int128 p0 = static_cast<unsigned __int128>(kM0) * ctr[0];
            const unsigned __int128 p1 = static_cast<unsigned __int128>(kM1) * ctr[2];
            const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
            const auto lo0 = static_cast<std::uint64_t>(p0);
            const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
            const auto lo1 = static_cast<std::uint64_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

/// FNV-1a 64 of a name, used to turn experiment names into stream ids.
constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Identifies every random draw: key = (master_seed, experiment_id), counter =
/// (draw_block, replicate, component, 0). A path's numbers depend only on these, never on
/// the batch it was generated in or the thread that generated it.
struct SeedPolicy {
    std::uint64_t master_seed = 0;
    std::uint64_t experiment_id = 0;
    /// Replicate index of row 0 of a batch.
    std::uint64_t first_replicate = 0;

    static SeedPolicy named(std::uint64_t seed, std::string_view experiment) {
        return {seed, fnv1a64(experiment), 0};
    }
    friend bool operator==(const SeedPolicy&, const SeedPolicy&) = default;
};

/// (0,1] from the top 53 bits.
inline double u64_to_open_unit(std::uint64_t x) {
    return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
}

/// Standard normals for one (replicate, component) stream, four per Philox call via Box-Muller.
/// Element j of the stream is always the same number, whatever the requested window.
inline void fill_normals(const SeedPolicy& seed, std::uint64_t replicate, std::uint64_t component,
                         std::span<double> out, std::uint64_t offset = 0) {
    const Philox4x64::Key key{seed.master_seed, seed.experiment_id};
    std::size_t j = 0;
    std::uint64_t idx = offset;
    while (j < out.size()) {
        const std::uint64_t block = idx / 4;
        const auto r = Philox4x64::generate({block, replicate, component, 0}, key);
        double z[4];
        for (int p = 0; p < 2; ++p) {
            const double u1 = u64_to_open_unit(r[2 * p]);
            const double u2 = u64_to_open_unit(r[2 * p + 1]);
            const double rad = std::sqrt(-2.0 * std::log(u1));
            const double ang = 2.0 * std::numbers::pi * u2;
            z[2 * p] = rad * std::cos(ang);
            z[2 * p + 1] = rad * std::sin(ang);
        }
        for (std::uint64_t k = idx % 4; k < 4 && j < out.size(); ++k, ++idx) out[j++] = z[k];
    }
}

}  // namespace mixpersist
