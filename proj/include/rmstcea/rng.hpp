#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace rmstcea {

/// Philox4x64-10 counter-based generator (Salmon et al. 2011 construction).
///
/// The 128-bit key is (seed, stream), so every (seed, replicate) pair owns an
/// independent substream. The counter is incremented before each block, which makes
/// the output sequence identical to numpy.random.Philox(key=[seed, stream]).
class Philox4x64 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  Philox4x64(std::uint64_t seed, std::uint64_t stream) : key_{seed, stream} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) {
      increment();
      buf_ = block(ctr_, key_);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  /// Exponential with the given rate (inverse CDF).
  double exponential(double rate);
  bool bernoulli(double p) { return uniform() < p; }

  /// Ten-round bijection of one counter block under `key`.
  static Block block(Block ctr, Key key);

 private:
  void increment() {
    for (auto& c : ctr_)
      if (++c != 0) break;
  }

  Key key_;
  Block ctr_{0, 0, 0, 0};
  Block buf_{};
  int pos_ = 4;
};

}  // namespace rmstcea
