#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, iteration, index, block), so results never depend on which
// worker thread produced them or in which order.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace cbo {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Independent sub-streams used by the solver.
enum class Stream : std::uint32_t {
  Init = 1,
  Noise = 2,
  Batch = 3,
  ProblemGen = 4,
  Test = 0xFFFF,
};

/// A sequential view over one (seed, stream, iteration, index) substream.
/// Cheap to construct; holds no shared state.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream stream, std::uint64_t iteration, std::uint64_t index) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(iteration),
             static_cast<std::uint32_t>(stream) | (static_cast<std::uint32_t>(iteration >> 32) << 16) |
                 (static_cast<std::uint32_t>(index >> 32) << 24),
             0u} {}

  std::uint64_t next_u64() noexcept {
    if (used_ >= 2) refill();
    const std::uint64_t v = (static_cast<std::uint64_t>(buf_[2 * used_]) << 32) | buf_[2 * used_ + 1];
    ++used_;
    return v;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; pairs are cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, bound) for 0 < bound <= 2^32 (multiply-shift;
  /// bias below bound / 2^32).
  std::uint64_t below(std::uint64_t bound) noexcept { return ((next_u64() >> 32) * bound) >> 32; }

 private:
  void refill() noexcept {
    buf_ = Philox4x32::generate(ctr_, key_);
    ++ctr_[3];
    used_ = 0;
  }

  Philox4x32::Key key_;
  Philox4x32::Counter ctr_;
  Philox4x32::Counter buf_{};
  int used_ = 2;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cbo
