#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace svext {

/// (master_seed, stream_id) fully determines a random stream.
struct RngSeed {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child stream `k` of `seed`. Children of distinct (stream_id, k) pairs
/// never share a Philox counter block.
inline constexpr RngSeed substream(RngSeed seed, std::uint64_t k) {
  return {seed.master_seed,
          splitmix64(seed.stream_id ^ splitmix64(k + 0x5851F42D4C957F2DULL))};
}

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// The 64-bit master seed is the key; the stream id occupies the upper
/// half of the 128-bit counter and the draw position the lower half, so
/// any stream can be entered at any position without replaying it.
class Philox {
 public:
  using result_type = std::uint64_t;

  explicit Philox(RngSeed seed, std::uint64_t position = 0)
      : key_{static_cast<std::uint32_t>(seed.master_seed),
             static_cast<std::uint32_t>(seed.master_seed >> 32)},
        stream_(seed.stream_id),
        block_(position) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    if (used_ == 2) refill();
    return buffer_[used_++];
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  void refill() {
    std::array<std::uint32_t, 4> c{
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    std::array<std::uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
      k[0] += kW0;
      k[1] += kW1;
    }
    buffer_[0] = (static_cast<std::uint64_t>(c[1]) << 32) | c[0];
    buffer_[1] = (static_cast<std::uint64_t>(c[3]) << 32) | c[2];
    ++block_;
    used_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_;
  std::array<std::uint64_t, 2> buffer_{};
  int used_ = 2;
};

/// Sequential variate source over one Philox stream. All transforms are
/// implemented here so output is bit-identical across standard libraries.
class Stream {
 public:
  explicit Stream(RngSeed seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Marsaglia polar method; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double exponential() { return -std::log(uniform()); }

  /// Gamma(shape, 1) via Marsaglia-Tsang, with the u^(1/shape) boost for
  /// shape < 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double z, v;
      do {
        z = normal();
        v = 1.0 + c * z;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
      if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double sign() { return (engine_() >> 63) ? -1.0 : 1.0; }

 private:
  Philox engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace svext
