#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace stan {

// Deterministic random source.  All randomness in the library flows through
// this class so that a fixed seed yields byte-identical outputs across runs
// and platforms.  std::mt19937_64 has a portable, standard-mandated output
// sequence; the uniform/normal/integer transforms below are written out
// explicitly because the std::*_distribution wrappers are not portable across
// standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t raw() { return gen_(); }

  // Uniform on [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(raw() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.  The spare value is cached, so a single
  // draw consumes either two raw values or none.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer on [0, n).  Lemire's multiply-shift rejection method:
  // unbiased and much faster than modulo + rejection.
  uint64_t integer(uint64_t n);

  // Index drawn from an (unnormalized) discrete distribution.
  // Returns the last index with positive weight when rounding pushes the
  // cumulative sum short of the target.
  int categorical(std::span<const double> weights);

  // Fisher-Yates shuffle of an index vector.
  template <typename T>
  void shuffle(std::span<T> v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(integer(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent child seed from (base, stream) via splitmix64.
// Used to give each attribute head / tree / fold its own stream so results do
// not depend on scheduling order.
uint64_t derive_seed(uint64_t base, uint64_t stream);

}  // namespace stan
