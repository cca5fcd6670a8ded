#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace deblur {

/// Counter-based generator: the n-th draw is a pure function of
/// (seed, stream name, n), so independent streams can be created for every
/// operation or network without coordinating call order.
/// Satisfies UniformRandomBitGenerator for use with <random> distributions.
class SplitRng {
public:
    using result_type = std::uint64_t;

    SplitRng(std::uint64_t seed, std::string_view stream) : key_(mix(seed ^ hash(stream))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Independent child stream.
    SplitRng fork(std::string_view child) const { return SplitRng(key_, child); }

    std::uint64_t counter() const { return counter_; }

private:
    static constexpr std::uint64_t mix(std::uint64_t z)
    {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static constexpr std::uint64_t hash(std::string_view s)
    {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001B3ULL;
        }
        return h;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace deblur
