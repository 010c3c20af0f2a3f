#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace okpz {

/// Philox4x32-10 counter-based generator. Stateless: the output is a pure
/// function of (counter, key), so any draw can be regenerated in any order.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

inline Philox4x32::Key philox_key(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Uniform on (0, 1] from the top 53 bits.
inline double unit_open(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

/// Two uniforms from one Philox block.
inline std::array<double, 2> uniform_pair(const Philox4x32::Counter& ctr,
                                          const Philox4x32::Key& key) {
  const auto out = Philox4x32::generate(ctr, key);
  const std::uint64_t a = (std::uint64_t{out[0]} << 32) | out[1];
  const std::uint64_t b = (std::uint64_t{out[2]} << 32) | out[3];
  return {unit_open(a), unit_open(b)};
}

/// Box–Muller on a uniform pair.
inline std::array<double, 2> box_muller(double u1, double u2) {
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(angle), r * std::sin(angle)};
}

/// Domain-separation tags for the counter word that identifies the consumer.
enum class StreamTag : std::uint32_t {
  noise = 1,
  bridge = 2,
  coupling = 3,
  polymer = 4,
  cpk_random = 5,
  test = 99,
};

/// Sequential stream over a fixed (seed, stream id, tag) counter prefix. Each
/// path/chain/sample owns its own stream, so results do not depend on how work
/// is split across threads.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream, StreamTag tag)
      : key_(philox_key(seed)),
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)),
        tag_(static_cast<std::uint32_t>(tag)) {}

  double uniform() {
    if (have_uniform_) {
      have_uniform_ = false;
      return spare_uniform_;
    }
    const auto u = uniform_pair({stream_lo_, stream_hi_, block_++, tag_}, key_);
    spare_uniform_ = u[1];
    have_uniform_ = true;
    return u[0];
  }

  double normal() {
    if (have_normal_) {
      have_normal_ = false;
      return spare_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const auto z = box_muller(u1, u2);
    spare_normal_ = z[1];
    have_normal_ = true;
    return z[0];
  }

 private:
  Philox4x32::Key key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint32_t tag_;
  std::uint32_t block_ = 0;
  double spare_uniform_ = 0.0;
  double spare_normal_ = 0.0;
  bool have_uniform_ = false;
  bool have_normal_ = false;
};

}  // namespace okpz
