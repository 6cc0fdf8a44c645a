#pragma once

#include <array>
#include <cstdint>

namespace rlab {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3", SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based stream. Each (seed, purpose, index) triple names an
/// independent stream, so a worker can draw the numbers for sample `index`
/// without touching any shared state; results do not depend on scheduling.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t purpose, std::uint64_t index)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{0u, static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
             purpose} {}

  std::uint64_t next_u64() {
    if (pos_ >= 4) refill();
    const std::uint64_t lo = buf_[pos_++];
    if (pos_ >= 4) refill();
    const std::uint64_t hi = buf_[pos_++];
    return lo | (hi << 32);
  }

  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on [a,b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  void refill() {
    buf_ = philox4x32(ctr_, key_);
    ++ctr_[0];
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

/// Stream purposes, so that different consumers of the same seed never share
/// a stream.
namespace rng_purpose {
inline constexpr std::uint32_t kSampleRoot = 1;
inline constexpr std::uint32_t kShuffle = 2;
inline constexpr std::uint32_t kMonteCarlo = 3;
inline constexpr std::uint32_t kBranch = 4;
inline constexpr std::uint32_t kBoxes = 5;
inline constexpr std::uint32_t kCenters = 6;
inline constexpr std::uint32_t kFrame = 7;
inline constexpr std::uint32_t kPoints = 8;
}  // namespace rng_purpose

}  // namespace rlab
