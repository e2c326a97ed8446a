#pragma once

// Exponential backoff with full jitter: delay for attempt n is uniform in
// [0, min(cap, base * factor^n)). Defaults: 500 ms base, factor 2, 30 s
// cap.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "fieldsync/rng.hpp"

namespace fieldsync::syncq {

struct BackoffPolicy {
    std::int64_t base_ms = 500;
    double factor = 2.0;
    std::int64_t cap_ms = 30'000;

    std::int64_t delay_ms(int attempt, SplitMix64& rng) const {
        double ceiling = static_cast<double>(base_ms) *
                         std::pow(factor, static_cast<double>(attempt));
        std::int64_t bound = static_cast<std::int64_t>(
            std::min(ceiling, static_cast<double>(cap_ms)));
        bound = std::max<std::int64_t>(bound, 1);
        return static_cast<std::int64_t>(
            rng.below(static_cast<std::uint64_t>(bound)));
    }
};

}  // namespace fieldsync::syncq
