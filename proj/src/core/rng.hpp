#pragma once

#include <cstdint>
#include <random>

namespace glab {

// Deterministic RNG wrapper. Gaussian draws use the polar method on top of
// the raw 64-bit stream so the sequence does not depend on the standard
// library's distribution implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int64_t uniform_int(int64_t lo, int64_t hi);  // inclusive range [lo, hi]

  double normal();
  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  // Derive an independent substream; deterministic in (parent seed, stream).
  Rng fork(uint64_t stream);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

uint64_t mix_seed(uint64_t a, uint64_t b);

}  // namespace glab
