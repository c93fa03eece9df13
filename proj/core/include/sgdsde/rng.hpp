#pragma once

// Counter-based random number generation (Philox4x32-10).
//
// Monte Carlo ensembles must be bit-reproducible regardless of how
// trajectories are scheduled across threads. A counter-based generator makes
// every draw a pure function of (seed, stream, position), so each trajectory
// owns a stream keyed by its index and no generator state is ever shared.
//
// The Philox4x32-10 round function follows the widely used construction of
// Salmon et al. (SC'11): four 32-bit counter words, two 32-bit key words,
// ten rounds of multiply-hi/lo mixing with Weyl key schedule.

#include <array>
#include <cmath>
#include <cstdint>

namespace sgdsde {

class CounterRng {
 public:
  // One generator per (seed, stream). Distinct streams of the same seed are
  // statistically independent; the Monte Carlo drivers key streams by
  // trajectory index.
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed & 0xffffffffu),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(stream & 0xffffffffu)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  // Uniform on the open interval (0, 1); 53-bit resolution, never 0 or 1.
  double uniform() {
    const std::uint64_t u = next_u64();
    return static_cast<double>(u >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  // Standard normal via Box-Muller; generates pairs, returns them in order.
  double normal() {
    if (have_cached_normal_) {
      have_cached_normal_ = false;
      return cached_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_normal_ = r * std::sin(theta);
    have_cached_normal_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t next_u64() {
    if (block_pos_ == 0) {
      refill();
    }
    const std::uint64_t v = pending_[2 - block_pos_];
    --block_pos_;
    return v;
  }

 private:
  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p & 0xffffffffu);
  }

  // One 10-round Philox4x32 block at the current counter position.
  std::array<std::uint32_t, 4> block() const {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter_ & 0xffffffffu),
        static_cast<std::uint32_t>(counter_ >> 32), stream_lo_, stream_hi_};
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, ctr[0], hi0, lo0);
      mulhilo(0xCD9E8D57u, ctr[2], hi1, lo1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += 0x9E3779B9u;  // Weyl sequence key schedule
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

  void refill() {
    const std::array<std::uint32_t, 4> out = block();
    ++counter_;
    pending_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    pending_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    block_pos_ = 2;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> pending_ = {0, 0};
  int block_pos_ = 0;
  double cached_normal_ = 0.0;
  bool have_cached_normal_ = false;
};

}  // namespace sgdsde
