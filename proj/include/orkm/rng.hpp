#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string_view>

namespace orkm {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(a ^ (mix64(b) + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

/// FNV-1a over a purpose tag, so that streams for different purposes never overlap.
constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t hash_double(std::uint64_t h, double x) noexcept {
    if (x == 0.0) x = 0.0; // fold -0.0 onto +0.0
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    return hash_combine(h, bits);
}

/// Maps 64 random bits to a double in the open interval (0, 1).
constexpr double unit_open(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/**
 * Counter-based random stream keyed by (seed, purpose tag, sub-key).
 *
 * The n-th draw is a pure function of the key and n, so any consumer that
 * derives its sub-key from stable identifiers (a row's content, a step index)
 * gets the same draws regardless of the order in which it asks for them.
 * Satisfies UniformRandomBitGenerator, so it can feed <random> distributions.
 */
class KeyedStream {
public:
    using result_type = std::uint64_t;

    KeyedStream(std::uint64_t seed, std::string_view tag, std::uint64_t subkey = 0) noexcept
        : key_(hash_combine(hash_combine(mix64(seed), tag_hash(tag)), subkey)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return at(counter_++); }

    result_type at(std::uint64_t n) const noexcept { return mix64(key_ + n * 0xd1b54a32d192ed03ULL); }

    double uniform() noexcept { return unit_open((*this)()); }

    std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace orkm
