#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace ifcps {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

// Deterministic SplitMix64 stream. All randomness in the project flows from
// RngKey-derived streams; there is no global RNG state, and a stream's draws
// never depend on how much another stream consumed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return detail::splitmix64(state_); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0.
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller (second value discarded; no hidden state).
    double normal() {
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

// Hierarchical key for deriving independent named streams, e.g.
// RngKey(seed).child("dataset").child(i).stream(). Children are derived from
// the key value alone, never from consumed stream state.
class RngKey {
public:
    explicit RngKey(std::uint64_t key) : key_(key) {}

    RngKey child(std::string_view tag) const {
        std::uint64_t s = key_ ^ detail::fnv1a(tag);
        return RngKey(detail::splitmix64(s));
    }

    RngKey child(std::uint64_t index) const {
        std::uint64_t s = key_ ^ (0x9e3779b97f4a7c15ULL + index);
        return RngKey(detail::splitmix64(s));
    }

    Rng stream() const { return Rng(key_); }

    std::uint64_t value() const { return key_; }

private:
    std::uint64_t key_;
};

} // namespace ifcps
