#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace fdhap {

// Identifies one reproducible random stream. Equal (seed, stream_id) pairs
// reproduce identical draw sequences bit-for-bit on every platform.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Deterministic generator: mt19937_64 state derived from (seed, stream_id),
// uniforms taken from raw 64-bit words and normals via explicit Box-Muller.
// std::normal_distribution is implementation-defined, so it is not used here.
class Rng {
 public:
  explicit Rng(RngStream s)
      : gen_(detail::splitmix64(detail::splitmix64(s.seed) ^
                                detail::splitmix64(~s.stream_id))) {}

  Rng(std::uint64_t seed, std::uint64_t stream_id) : Rng(RngStream{seed, stream_id}) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Circularly-symmetric complex normal with total variance `variance`:
  // independent real and imaginary parts, each of variance variance/2.
  std::complex<double> cgaussian(double variance = 1.0) {
    const double s = std::sqrt(variance * 0.5);
    return {s * gaussian(), s * gaussian()};
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace fdhap
