#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Each
// (seed, stream) pair names an independent sequence, so trials and
// permutations can be drawn in any order or on any thread and still
// reproduce bit-for-bit.

#include <array>
#include <cstdint>
#include <limits>

namespace mmdmp {

class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (lane_ == 2) {
      out_ = bijection(counter_block(block_++), key_);
      lane_ = 0;
    }
    const auto lo = static_cast<std::uint64_t>(out_[2 * lane_]);
    const auto hi = static_cast<std::uint64_t>(out_[2 * lane_ + 1]);
    ++lane_;
    return lo | (hi << 32);
  }

  void discard(std::uint64_t z) {
    for (; z > 0; --z) (*this)();
  }

  /// The keyed bijection itself, ten rounds.
  static Block bijection(Block ctr, Key key) {
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += w0;
      key[1] += w1;
    }
    return ctr;
  }

 private:
  [[nodiscard]] Block counter_block(std::uint64_t i) const {
    return {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32),
            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  }

  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block out_{};
  int lane_ = 2;
};

/// SplitMix64 finalizer; used to fold structured identifiers into stream ids.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_id(std::uint64_t tag, std::uint64_t a = 0, std::uint64_t b = 0) {
  return mix64(mix64(mix64(tag) ^ a) ^ b);
}

// Stream tags, one per consumer, so that no two components share a sequence.
namespace streams {
inline constexpr std::uint64_t featurizer_init = 1;
inline constexpr std::uint64_t batches = 2;
inline constexpr std::uint64_t permutations = 3;
inline constexpr std::uint64_t sample_p = 4;
inline constexpr std::uint64_t sample_q = 5;
inline constexpr std::uint64_t split = 6;
inline constexpr std::uint64_t diagnostics = 7;
inline constexpr std::uint64_t test_sets = 8;
}  // namespace streams

}  // namespace mmdmp
