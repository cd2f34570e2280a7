#pragma once

#include <cstdint>
#include <cstring>
#include <cmath>
#include <string_view>

namespace gats {

// xoshiro256++ stream seeded through splitmix64.
//
// State transition (per next_u64 call), s = (s0,s1,s2,s3):
//   result = rotl(s0 + s3, 23) + s0
//   t  = s1 << 17
//   s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t
//   s3 = rotl(s3, 45)
// Seeding: s_i = splitmix64(seed) applied four times in sequence.
// Gaussian variates come from Box-Muller on consecutive uniforms in
// (0,1]; the spare deviate is cached, so draws come in pairs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& si : s_) si = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in (0,1]; uses the top 53 bits.
  double uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    spare_ = mag * std::sin(ang);
    has_spare_ = true;
    return mag * std::cos(ang);
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Deterministic sub-stream seeds: FNV-1a over the task tag, mixed with
// the base seed and an index through splitmix64. Used so that, e.g.,
// Monte Carlo trial i always sees the same stream no matter which
// thread runs it.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t x = base ^ h;
  std::uint64_t m = Rng::splitmix64(x);
  x = m ^ (index * 0x9e3779b97f4a7c15ULL);
  return Rng::splitmix64(x);
}

}  // namespace gats
