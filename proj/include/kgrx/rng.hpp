#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace kgrx {

/// Seeded generator whose derived draws are identical on every standard
/// library. The std distributions are implementation-defined, so only the
/// raw mt19937_64 stream is used.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform in [0, n). n must be positive.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    /// Uniform integer in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(index(static_cast<std::size_t>(hi - lo + 1)));
    }

    bool chance(double p) { return uniform() < p; }

    /// Uniformly chosen element of a non-empty random-access range.
    template <typename Range>
    const auto& pick(const Range& items) {
        return items[index(items.size())];
    }

    /// Fisher-Yates.
    template <typename Range>
    void shuffle(Range& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace kgrx
