#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ftb {

// splitmix64: used to derive independent per-scene / per-stream seeds from a
// base seed. The engine itself is mt19937_64, whose output sequence is fixed
// by the standard; distributions are hand-rolled below so that identical
// (config, seed) pairs reproduce bit-identical results on any platform.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t s = base ^ (0x6a09e667f3bcc909ull + stream * 0x9e3779b97f4a7c15ull);
  splitmix64(s);
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform in [-1, 1].
  double uniform_signed() { return 2.0 * uniform01() - 1.0; }

  // Box-Muller; avoids std::normal_distribution, which is
  // implementation-defined.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in [lo, hi] via rejection-free Lemire-style reduction.
  std::uint64_t uniform_index(std::uint64_t n) {
    // n == 0 treated as full range.
    if (n == 0) return gen_();
    __uint128_t m = static_cast<__uint128_t>(gen_()) * n;
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ftb
