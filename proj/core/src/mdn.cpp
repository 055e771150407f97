#include "stan/mdn.hpp"

#include <cmath>

namespace stan {

void MixtureParams::validate() const {
  if (alpha.empty() || alpha.size() != mu.size() || alpha.size() != sigma.size())
    throw Error("mixture: inconsistent component counts");
  double total = 0.0;
  for (size_t i = 0; i < alpha.size(); ++i) {
    if (!(alpha[i] >= 0.0)) throw Error("mixture: negative weight");
    if (!(sigma[i] > 0.0)) throw Error("mixture: non-positive stddev");
    total += alpha[i];
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw Error("mixture: weights sum to " + std::to_string(total));
}

double mixture_log_pdf(const MixtureParams& p, double x) {
  return -nn::mdn_nll<double>(p.alpha, p.mu, p.sigma, x);
}

double mixture_cdf(const MixtureParams& p, double x) {
  double c = 0.0;
  for (size_t i = 0; i < p.alpha.size(); ++i) {
    const double z = (x - p.mu[i]) / (p.sigma[i] * M_SQRT2);
    c += p.alpha[i] * 0.5 * std::erfc(-z);
  }
  return c;
}

double mixture_bin_mass(const MixtureParams& p, double lo, double hi) {
  if (lo > hi) throw Error("mixture_bin_mass: lo > hi");
  const double m = mixture_cdf(p, hi) - mixture_cdf(p, lo);
  return m > 0.0 ? m : 0.0;
}

double sample_mixture(const MixtureParams& p, Rng& rng) {
  const int i = rng.categorical(p.alpha);
  return rng.normal(p.mu[i], p.sigma[i]);
}

}  // namespace stan
