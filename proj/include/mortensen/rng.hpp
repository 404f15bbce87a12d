// Seeded, splittable random source. Every stochastic operation takes an
// explicit seed; split() derives independent child streams so batch runs are
// reproducible regardless of scheduling.
#pragma once

#include <cstdint>
#include <random>

namespace mortensen {

namespace detail {
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {
    uint64_t s = seed;
    eng_.seed(detail::splitmix64(s));
  }

  // Independent stream derived from (seed, stream_id).
  Rng split(uint64_t stream_id) const {
    uint64_t s = seed_ ^ (0xD1B54A32D192ED03ULL * (stream_id + 1));
    return Rng(detail::splitmix64(s));
  }

  uint64_t seed() const { return seed_; }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }

  double normal() { return normal_(eng_); }

  uint64_t next_u64() { return eng_(); }

 private:
  uint64_t seed_;
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace mortensen
