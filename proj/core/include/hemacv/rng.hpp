#pragma once

#include <cstdint>
#include <vector>

namespace hemacv {

// SplitMix64 (Steele, Lea & Flood). All seeded behavior in this library
// (dataset shuffles, fixture jitter, epoch ordering) flows through this
// generator so that outputs reproduce bit-for-bit across platforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound). bound must be > 0. Plain modulo; the bias is
    // irrelevant at our scales and keeping it makes the sequence trivially
    // portable to other implementations.
    std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi).
    double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

private:
    std::uint64_t state_;
};

// Derives an independent stream for substream `index` of a run seeded with
// `seed`. Documented so that manifests and fixtures can be reproduced by
// other implementations: stream k uses SplitMix64(seed + (k+1) * golden).
inline SplitMix64 seeded_stream(std::uint64_t seed, std::uint64_t index) {
    return SplitMix64(seed + (index + 1) * 0x9E3779B97F4A7C15ull);
}

// Fisher-Yates, high index down, j = next() % (i+1).
template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace hemacv
