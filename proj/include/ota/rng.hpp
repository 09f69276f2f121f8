#ifndef OTA_RNG_HPP
#define OTA_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>

namespace ota {

// 64-bit finalizer used for seed derivation and generator seeding.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Purpose tags so that every random stream in a run is derived from the
// master seed plus an unambiguous address (purpose, realization, sweep point).
enum class Stream : std::uint64_t {
  topology = 1,
  channels = 2,
  samples = 3,
  solver_init = 4,
  noise = 5,
};

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t s = 0x243f6a8885a308d3ULL;
  for (std::uint64_t p : parts) {
    s ^= p;
    s = splitmix64(s);
  }
  return s;
}

inline std::uint64_t derive_seed(std::uint64_t master, Stream purpose,
                                 std::uint64_t a = 0, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  return derive_seed({master, static_cast<std::uint64_t>(purpose), a, b, c});
}

// xoshiro256++ with splitmix64 seeding. Hand-rolled instead of
// std::mt19937 + std::normal_distribution because the standard
// distributions are implementation-defined, which would break
// cross-platform reproducibility of saved results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Rejection keeps the draw unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (-n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  // Circularly-symmetric complex Gaussian with total variance 1
  // (real and imaginary parts each N(0, 1/2)). Marsaglia polar method;
  // the only libm dependencies are sqrt and log.
  std::complex<double> cnormal() {
    for (;;) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) {
        const double m = std::sqrt(-std::log(s) / s);
        return {u * m, v * m};
      }
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

}  // namespace ota

#endif
