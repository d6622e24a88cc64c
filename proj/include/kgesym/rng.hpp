#ifndef KGESYM_RNG_HPP
#define KGESYM_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace kgesym {

// All randomness in the library flows through these helpers. std::mt19937_64
// is seed-stable by standard; the draw helpers below avoid std distributions,
// whose output is implementation-defined, so identical seeds give identical
// streams on any platform.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Unbiased integer in [0, n) via rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = n == 0 ? 0 : ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    std::uint64_t v = rng();
    while (v > limit) v = rng();
    return v % n;
}

inline bool coin_flip(Rng& rng) { return (rng() & 1u) != 0; }

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace kgesym

#endif
