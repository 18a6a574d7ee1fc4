#include <doctest.h>

#include <cmath>
#include <vector>

#include "mixpersist/rng.hpp"

using namespace mixpersist;

TEST_SUITE("rng") {

TEST_CASE("Philox4x64-10 known-answer vectors") {
    using C = Philox4x64::Counter;
    using K = Philox4x64::Key;
    CHECK(Philox4x64::generate(C{0, 0, 0, 0}, K{0, 0}) ==
          C{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL, 0x7e68b68aec7ba23bULL});
    CHECK(Philox4x64::generate(C{0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL,
                                 0x082efa98ec4e6c89ULL},
                               K{0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL}) ==
          C{0xa528f45403e61d95ULL, 0x38c72dbd566e9788ULL, 0xa5a1610e72fd18b5ULL, 0x57bd43b5e52b7fe6ULL});
    CHECK(Philox4x64::generate(C{0, 5, 0, 0}, K{7, 11}) ==
          C{0x1649d9f89c959a38ULL, 0xc8dcf203b84e0c42ULL, 0xd88550d60e47d56fULL, 0x747eea02bbaed06cULL});
}

TEST_CASE("fnv1a64") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("open unit interval") {
    CHECK(u64_to_open_unit(0) > 0.0);
    CHECK(u64_to_open_unit(~0ULL) == 1.0);
}

TEST_CASE("normal windows are position-invariant") {
    const auto seed = SeedPolicy::named(42, "windows");
    std::vector<double> full(37);
    fill_normals(seed, 3, 1, full);
    for (std::size_t off : {1u, 2u, 5u, 13u}) {
        std::vector<double> part(full.size() - off);
        fill_normals(seed, 3, 1, part, off);
        for (std::size_t j = 0; j < part.size(); ++j) CHECK(part[j] == full[j + off]);
    }
    std::vector<double> other(37);
    fill_normals(seed, 4, 1, other);
    CHECK(other[0] != full[0]);
    fill_normals(seed, 3, 2, other);
    CHECK(other[0] != full[0]);
}

TEST_CASE("normal moments") {
    const auto seed = SeedPolicy::named(7, "moments");
    const std::size_t n = 400000;
    std::vector<double> z(n);
    fill_normals(seed, 0, 0, z);
    double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
    std::size_t tail = 0;
    for (const double v : z) {
        m1 += v;
        m2 += v * v;
        m3 += v * v * v;
        m4 += v * v * v * v;
        tail += std::abs(v) > 1.959963984540054;
    }
    m1 /= n;
    m2 /= n;
    m3 /= n;
    m4 /= n;
    // Five standard errors each.
    CHECK(std::abs(m1) < 5 * std::sqrt(1.0 / n));
    CHECK(std::abs(m2 - 1) < 5 * std::sqrt(2.0 / n));
    CHECK(std::abs(m3) < 5 * std::sqrt(15.0 / n));
    CHECK(std::abs(m4 - 3) < 5 * std::sqrt(96.0 / n));
    const double p = double(tail) / n;
    CHECK(std::abs(p - 0.05) < 5 * std::sqrt(0.05 * 0.95 / n));
}

}
