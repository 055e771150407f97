#include "stan/rng.hpp"

#include <cmath>

#include "stan/error.hpp"

namespace stan {

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller.  u1 is shifted away from zero to keep log() finite.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

uint64_t Rng::integer(uint64_t n) {
  if (n == 0) throw Error("Rng::integer: n must be positive");
  unsigned __int128 m = static_cast<unsigned __int128>(raw()) * n;
  uint64_t lo = static_cast<uint64_t>(m);
  if (lo < n) {
    const uint64_t threshold = -n % n;
    while (lo < threshold) {
      m = static_cast<unsigned __int128>(raw()) * n;
      lo = static_cast<uint64_t>(m);
    }
  }
  return static_cast<uint64_t>(m >> 64);
}

int Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error("Rng::categorical: weights sum to zero");
  const double target = uniform() * total;
  double cum = 0.0;
  int last_positive = -1;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) last_positive = static_cast<int>(i);
    cum += weights[i];
    if (target < cum) return static_cast<int>(i);
  }
  return last_positive;
}

uint64_t derive_seed(uint64_t base, uint64_t stream) {
  // splitmix64 finalizer over the combined state; avalanches both inputs.
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace stan
