#pragma once

#include <array>
#include <cstdint>

namespace llweak {

/// Philox4x64-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3").
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key);

/// One 64-bit draw, a pure function of (seed, stream, counter).
std::uint64_t counter_draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

/// Sequential view over the draws of one stream. Trajectory i of an ensemble
/// uses stream i, so results do not depend on scheduling.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0)
      : seed_(seed), stream_(stream), counter_(counter) {}

  std::uint64_t next_u64() { return counter_draw(seed_, stream_, counter_++); }
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal by inverse-CDF transform of one uniform.
  double gaussian();
  /// +1 or -1 with probability 1/2 each.
  double two_point() { return (next_u64() >> 63) != 0 ? 1.0 : -1.0; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_;
};

}  // namespace llweak
