#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace grand {

// Philox4x32-10 counter-based generator.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }
};

// Purpose-tagged substreams of one seeded run. Draw n of a stream is a pure
// function of (seed, stream, n), so two runs with the same seed consume
// identical randomness for a given purpose regardless of what other streams
// were used for.
enum class Stream : std::uint32_t {
  EventClock = 1,
  EventChoice = 2,
  Placement = 3,
  Perturbation = 4,
};

class StreamRng {
 public:
  StreamRng(std::uint64_t seed, Stream stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(static_cast<std::uint32_t>(stream)) {}

  // Two independent uniforms in [0, 1) from draw n.
  std::array<double, 2> uniforms(std::uint64_t n) const {
    const auto out = Philox4x32::block(
        {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32), stream_, 0u},
        key_);
    return {to_unit(out[0], out[1]), to_unit(out[2], out[3])};
  }

  // Sequential interface for callers that do not need coupling.
  double next_uniform() {
    if (!has_spare_) {
      spare_ = uniforms(counter_++);
      has_spare_ = true;
      return spare_[0];
    }
    has_spare_ = false;
    return spare_[1];
  }

  double next_normal() {
    // Box-Muller; 1 - u avoids log(0).
    const double u1 = 1.0 - next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (std::uint64_t{hi} << 32 | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_;
  std::uint64_t counter_ = 0;
  std::array<double, 2> spare_{};
  bool has_spare_ = false;
};

}  // namespace grand
