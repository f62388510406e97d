#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace accelmc {

// Philox 4x32-10 counter-based generator (Salmon, Moraes, Dror, Shaw, SC'11).
// A block is a pure function of (key, counter), so any position in any stream
// can be regenerated in isolation: no generator state is carried between
// draws, which makes path-level parallelism and replay trivial.
//
// Layout used here: key = 64-bit seed, counter = (block_index, stream).
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_lo_(static_cast<std::uint32_t>(seed)),
        key_hi_(static_cast<std::uint32_t>(seed >> 32)),
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  Block block(std::uint64_t index) const noexcept {
    std::uint32_t c0 = static_cast<std::uint32_t>(index);
    std::uint32_t c1 = static_cast<std::uint32_t>(index >> 32);
    std::uint32_t c2 = stream_lo_;
    std::uint32_t c3 = stream_hi_;
    std::uint32_t k0 = key_lo_;
    std::uint32_t k1 = key_hi_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k0 += 0x9E3779B9u;  // golden ratio
        k1 += 0xBB67AE85u;  // sqrt(3) - 1
      }
      const std::uint64_t p0 = 0xD2511F53ull * c0;
      const std::uint64_t p1 = 0xCD9E8D57ull * c2;
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      c1 = lo1;
      c3 = lo0;
      c0 = n0;
      c2 = n2;
    }
    return {c0, c1, c2, c3};
  }

 private:
  std::uint32_t key_lo_, key_hi_, stream_lo_, stream_hi_;
};

// Inverse standard-normal CDF, Wichura's PPND16 (algorithm AS 241).
// Relative error below 1e-15 over (0,1). The central branch is pure rational
// arithmetic; the tails go through sqrt(-log r). Returns NaN outside (0,1).
inline double normal_inv_cdf(double p) noexcept {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
            1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
          1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return q * num / den;
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  if (!(r > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    x = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-6) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    x = num / den;
  }
  return (q < 0.0) ? -x : x;
}

// Deterministic stream of standard Gaussians indexed by (seed, stream, i).
// One Philox block feeds two draws; each draw maps 64 bits to a uniform in
// (0,1) and through normal_inv_cdf. Bit-stable given identical libm.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream) noexcept
      : philox_(seed, stream) {}

  double at(std::uint64_t i) const noexcept {
    const Philox4x32::Block b = philox_.block(i >> 1);
    const unsigned off = (i & 1u) ? 2u : 0u;
    return normal_inv_cdf(uniform01(b[off], b[off + 1]));
  }

  // Fills out[j] with draw (first_index + j); identical to calling at() for
  // each index but touches each Philox block once.
  void fill(std::span<double> out, std::uint64_t first_index = 0) const noexcept {
    std::uint64_t i = first_index;
    std::size_t j = 0;
    Philox4x32::Block b{};
    bool have_block = false;
    while (j < out.size()) {
      if (!have_block || (i & 1u) == 0u) {
        b = philox_.block(i >> 1);
        have_block = true;
      }
      const unsigned off = (i & 1u) ? 2u : 0u;
      out[j] = normal_inv_cdf(uniform01(b[off], b[off + 1]));
      ++i;
      ++j;
    }
  }

 private:
  static double uniform01(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    // top 53 bits, centered: strictly inside (0,1) so the inverse CDF is finite
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  Philox4x32 philox_;
};

}  // namespace accelmc
