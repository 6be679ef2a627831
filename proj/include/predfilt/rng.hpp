#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace predfilt {

// Independent streams derived from one experiment seed.
enum class Stream : std::uint32_t {
  kInit = 0,
  kAgent = 1,
  kEnv = 2,
  kData = 3,
  kDrift = 4,
  kTarget = 5,
  kTest = 6,
};

/// Philox4x32-10 counter-based generator keyed by (seed, stream).
///
/// Satisfies UniformRandomBitGenerator, so it plugs into the <random>
/// distributions. Each (seed, stream, sub) triple gives an independent
/// sequence; `fork(sub)` derives a child generator without touching this one.
class Philox {
 public:
  using result_type = std::uint32_t;

  Philox(std::uint64_t seed, Stream stream, std::uint32_t sub = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        counter_{0, 0, static_cast<std::uint32_t>(stream), sub} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (index_ == 4) {
      block_ = round10(counter_, key_);
      if (++counter_[0] == 0) ++counter_[1];
      index_ = 0;
    }
    return block_[index_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = (*this)() >> 5;
    const std::uint64_t lo = (*this)() >> 6;
    return (static_cast<double>(hi) * 67108864.0 + static_cast<double>(lo)) * (1.0 / 9007199254740992.0);
  }

  Philox fork(std::uint32_t sub) const {
    Philox child = *this;
    child.counter_ = {0, 0, counter_[2] ^ 0x9E3779B9u, counter_[3] + sub + 1};
    child.key_ = {key_[0] ^ (sub * 0x85EBCA6Bu), key_[1] + 0xC2B2AE35u};
    child.index_ = 4;
    return child;
  }

 private:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block round10(Block c, Key k) {
    constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
      k[0] += kW0;
      k[1] += kW1;
    }
    return c;
  }

  Key key_;
  Block counter_;
  Block block_{};
  int index_ = 4;
};

}  // namespace predfilt
