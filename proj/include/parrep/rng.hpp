#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace parrep {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline constexpr std::array<std::uint32_t, 4>
philox4x32_10(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

}  // namespace detail

/// Counter-based random stream (Philox4x32-10).
///
/// A draw is a pure function of (master_seed, stream_id, draw_index): the
/// master seed is the Philox key and (draw_index, stream_id) fill the
/// 128-bit counter. Streams with different ids never share a counter
/// block, and any stream can be replayed from an arbitrary position.
/// Each draw consumes one block and keeps 53 bits of it.
class RngStream {
  public:
    constexpr RngStream() = default;
    constexpr RngStream(std::uint64_t master_seed, std::uint64_t stream_id,
                        std::uint64_t draw_index = 0)
        : seed_(master_seed), stream_(stream_id), counter_(draw_index) {}

    constexpr std::uint64_t master_seed() const { return seed_; }
    constexpr std::uint64_t stream_id() const { return stream_; }
    constexpr std::uint64_t draw_index() const { return counter_; }

    /// Stream for a named sub-task, e.g. child(cycle).child(replica).
    constexpr RngStream child(std::uint64_t index) const {
        return RngStream(seed_, detail::splitmix64(stream_ ^ detail::splitmix64(index + 1)));
    }
    constexpr RngStream child(std::initializer_list<std::uint64_t> path) const {
        RngStream s = *this;
        for (auto i : path) s = s.child(i);
        return s;
    }

    constexpr std::uint64_t next_u64() {
        const auto out = detail::philox4x32_10(
            {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
             static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
            {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
        ++counter_;
        return (std::uint64_t{out[0]} << 32) | out[1];
    }

    /// Uniform on the open interval (0, 1).
    constexpr double uniform() {
        const std::uint64_t bits = next_u64() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    /// Exp(rate) by inverse CDF on a single uniform.
    double exponential(double rate) { return -std::log(uniform()) / rate; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

  private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace parrep
