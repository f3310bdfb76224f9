#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace pathsample {

/// Philox4x64-10 counter-based generator (Salmon et al., SC'11).
///
/// A stream is identified by a 128-bit key (seed, stream id); the 256-bit
/// counter advances once per block of four outputs. Output order matches
/// numpy.random.Philox, which increments the counter before the first block.
/// Satisfies UniformRandomBitGenerator.
class Philox4x64 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static constexpr std::string_view algorithm = "philox4x64-10/v1";

  Philox4x64(std::uint64_t seed, std::uint64_t stream) : key_{seed, stream} {}
  Philox4x64(Key key, Block counter) : key_(key), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (buffered_ == 4) {
      increment();
      buffer_ = encrypt(counter_, key_);
      buffered_ = 0;
    }
    return buffer_[buffered_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();

  static Block encrypt(Block counter, Key key);

 private:
  void increment() {
    for (auto& word : counter_) {
      if (++word != 0) break;
    }
  }

  Key key_;
  Block counter_{0, 0, 0, 0};
  Block buffer_{};
  int buffered_ = 4;
};

}  // namespace pathsample
