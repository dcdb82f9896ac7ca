#pragma once

#include <cstdint>

namespace geoloc {

// Finalizer from the splitmix64 generator. Good avalanche, cheap, and
// stable across platforms, which matters because several protocol decisions
// are derived from hashes and must be identical in every run mode.
constexpr uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Sequential splitmix64 stream. Used wherever a scenario needs a sequence
// of draws (trace synthesis, payload sizing).
class SplitMix64 {
  public:
    explicit constexpr SplitMix64(uint64_t seed) : state_(seed) {}

    constexpr uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1). 53 random bits, exactly representable.
    constexpr double nextUnit() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Uniform in [0, bound). bound must be nonzero. Uses rejection to stay
    // unbiased; the loop terminates with overwhelming probability.
    constexpr uint64_t nextBounded(uint64_t bound) {
        const uint64_t threshold = -bound % bound;
        for (;;) {
            const uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

  private:
    uint64_t state_;
};

// Pure keyed hash: the same (seed, a, b, c) always gives the same word, no
// matter who computes it or when. This is how per-event protocol decisions
// (write a review or not, payload length) stay independent of message
// timing across run modes.
constexpr uint64_t hashStream(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t h = mix64(seed ^ 0x5bf0'3635'ce4d'9e1fULL);
    h = mix64(h ^ mix64(a));
    h = mix64(h ^ mix64(b));
    h = mix64(h ^ mix64(c));
    return h;
}

// hashStream mapped to [0, 1).
constexpr double unitHash(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    return static_cast<double>(hashStream(seed, a, b, c) >> 11) * 0x1.0p-53;
}

}  // namespace geoloc
