#pragma once

// Counter-based random numbers: Philox4x32-10 (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3"). Output depends only on (key, counter), so
// sample j of a stream is reproducible bit-for-bit on any platform and any
// split of the counter range across workers.

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace pdiff {

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}
  Philox4x32(std::uint32_t k0, std::uint32_t k1) : key_{k0, k1} {}

  Block operator()(Block counter) const {
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * counter[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * counter[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0};
    }
    return counter;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
  std::array<std::uint32_t, 2> key_;
};

/// Sequential uniform doubles in [0, 1) drawn from one Philox stream. Each
/// counter value yields two doubles (53 bits from each 64-bit half).
class UniformStream {
 public:
  UniformStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t start = 0)
      : gen_(seed), stream_(stream), counter_(start) {}

  double next() {
    if (pos_ == 2) {
      block_ = gen_({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                     static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)});
      ++counter_;
      pos_ = 0;
    }
    const std::uint64_t bits =
        (static_cast<std::uint64_t>(block_[2 * pos_ + 1]) << 32) | block_[2 * pos_];
    ++pos_;
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }

  /// Uniform point in the axis-aligned box [lower, upper].
  Eigen::VectorXd point(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    Eigen::VectorXd p(lower.size());
    for (Eigen::Index k = 0; k < p.size(); ++k) p[k] = uniform(lower[k], upper[k]);
    return p;
  }

 private:
  Philox4x32 gen_;
  std::uint64_t stream_;
  std::uint64_t counter_;
  Philox4x32::Block block_{};
  int pos_ = 2;
};

}  // namespace pdiff
