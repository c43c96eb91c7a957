// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random streams. Every consumer derives its own stream from
// (seed, tag, indices...), so trials can run on any number of worker threads
// and still produce bit-identical results. The generator is the SplitMix64
// sequence; Gaussian variates use Box-Muller so the output does not depend
// on a library-specific normal_distribution implementation.

#ifndef GMUDPREC_RNG_HPP
#define GMUDPREC_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace gmudprec::rng {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class Stream {
  public:
    /// Derives an independent stream from a seed, a purpose tag and up to a
    /// few counter indices (trial, user, block, ...).
    static Stream derive(std::uint64_t seed, std::uint64_t tag,
                         std::initializer_list<std::uint64_t> idx) {
        std::uint64_t h = mix64(seed ^ 0xA5A5A5A55A5A5A5AULL);
        h = mix64(h ^ mix64(tag));
        for (std::uint64_t v : idx) h = mix64(h ^ mix64(v + 0x632BE59BD9B4E019ULL));
        return Stream(h);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1]; safe as a log argument.
    double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    /// One bit.
    int bit() { return static_cast<int>(next_u64() >> 63); }

    /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
    std::complex<double> cgauss(double variance) {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-variance * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(phi), r * std::sin(phi)};
    }

  private:
    explicit Stream(std::uint64_t s) : state_(s) {}
    std::uint64_t state_;
};

// Purpose tags for stream derivation.
inline constexpr std::uint64_t kTagSisoChannel = 0x5150;
inline constexpr std::uint64_t kTagMimoChannel = 0x5151;
inline constexpr std::uint64_t kTagLinkBlock = 0x5152;
inline constexpr std::uint64_t kTagCondStats = 0x5153;

} // namespace gmudprec::rng

#endif // GMUDPREC_RNG_HPP
