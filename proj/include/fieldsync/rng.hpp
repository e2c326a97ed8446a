#pragma once

// Deterministic 64-bit generator used everywhere reproducibility matters
// (simulation traces, jittered backoff, synthetic ids). SplitMix64 state
// update: state += 0x9E3779B97F4A7C15, output mixed with the
// Stafford/Steele finalizer. Same seed, same stream, on every platform.

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace fieldsync {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53 bits of resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) { return next() % bound; }

private:
    std::uint64_t state_;
};

// FNV-1a, for folding strings into seed material.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

// Stable per-label substream: mixes a label into a base seed so that
// independent parts of a run (per region, per provider, per probe) draw
// from non-overlapping deterministic streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
    SplitMix64 mix(base ^ fnv1a64(label));
    return mix.next();
}

// Random-looking but reproducible v4-format UUID string.
inline std::string uuid_from(SplitMix64& rng) {
    std::uint64_t hi = rng.next();
    std::uint64_t lo = rng.next();
    // version 4, variant 10xx
    hi = (hi & 0xFFFFFFFFFFFF0FFFull) | 0x0000000000004000ull;
    lo = (lo & 0x3FFFFFFFFFFFFFFFull) | 0x8000000000000000ull;
    char buf[37];
    std::snprintf(buf, sizeof buf, "%08x-%04x-%04x-%04x-%012llx",
                  static_cast<unsigned>(hi >> 32),
                  static_cast<unsigned>((hi >> 16) & 0xFFFF),
                  static_cast<unsigned>(hi & 0xFFFF),
                  static_cast<unsigned>(lo >> 48),
                  static_cast<unsigned long long>(lo & 0xFFFFFFFFFFFFull));
    return std::string(buf, 36);
}

}  // namespace fieldsync
