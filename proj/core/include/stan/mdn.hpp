#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "stan/error.hpp"
#include "stan/rng.hpp"

namespace stan {

// Parameters of a 1-D Gaussian mixture: weights (sum to 1), means, stddevs.
// Produced both by mixture-density network heads and by EM fitting.
struct MixtureParams {
  std::vector<double> alpha, mu, sigma;

  int components() const { return static_cast<int>(alpha.size()); }
  void validate() const;
};

double mixture_log_pdf(const MixtureParams& p, double x);
double mixture_cdf(const MixtureParams& p, double x);
// P(lo < X <= hi); requires lo <= hi.
double mixture_bin_mass(const MixtureParams& p, double lo, double hi);
double sample_mixture(const MixtureParams& p, Rng& rng);

namespace nn {

// Stddev clamp applied to exp(raw) head outputs.
inline constexpr double kSigmaMin = 1e-4;
inline constexpr double kSigmaMax = 10.0;

namespace detail {
template <typename T>
T log_sum_exp(std::span<const T> v) {
  T mx = v[0];
  for (T x : v) mx = std::max(mx, x);
  T s = T(0);
  for (T x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}
}  // namespace detail

// Transforms raw head outputs into mixture parameters: alpha = softmax(a_raw),
// sigma = clamp(exp(s_raw), smin, smax).
template <typename T>
void mdn_transform(std::span<const T> a_raw, std::span<const T> s_raw,
                   std::span<T> alpha, std::span<T> sigma, T smin, T smax) {
  const size_t g = a_raw.size();
  T mx = a_raw[0];
  for (T a : a_raw) mx = std::max(mx, a);
  T total = T(0);
  for (size_t i = 0; i < g; ++i) {
    alpha[i] = std::exp(a_raw[i] - mx);
    total += alpha[i];
  }
  for (size_t i = 0; i < g; ++i) alpha[i] /= total;
  for (size_t i = 0; i < g; ++i)
    sigma[i] = std::min(std::max(std::exp(s_raw[i]), smin), smax);
}

// Negative log likelihood -log sum_i alpha_i N(x | mu_i, sigma_i^2), computed
// with log-sum-exp.  Zero-weight components are skipped.
template <typename T>
T mdn_nll(std::span<const T> alpha, std::span<const T> mu,
          std::span<const T> sigma, T x) {
  constexpr T kHalfLog2Pi = T(0.9189385332046727417803297364056176L);
  std::vector<T> terms;
  terms.reserve(alpha.size());
  for (size_t i = 0; i < alpha.size(); ++i) {
    if (!(alpha[i] > T(0))) continue;
    const T z = (x - mu[i]) / sigma[i];
    terms.push_back(std::log(alpha[i]) - std::log(sigma[i]) - kHalfLog2Pi -
                    T(0.5) * z * z);
  }
  if (terms.empty()) throw Error("mdn_nll: all mixture weights are zero");
  return -detail::log_sum_exp<T>(terms);
}

// NLL of x under the mixture defined by raw head outputs, with analytic
// gradients with respect to those raw outputs:
//   d/da_i = alpha_i - r_i
//   d/dmu_i = r_i (mu_i - x) / sigma_i^2
//   d/ds_i = r_i (1 - z_i^2), zero where the sigma clamp is active
// where r_i are posterior responsibilities.
template <typename T>
T mdn_nll_grad(std::span<const T> a_raw, std::span<const T> mu,
               std::span<const T> s_raw, T x, std::span<T> ga, std::span<T> gmu,
               std::span<T> gs, T smin = T(kSigmaMin), T smax = T(kSigmaMax)) {
  constexpr T kHalfLog2Pi = T(0.9189385332046727417803297364056176L);
  const size_t g = a_raw.size();
  std::vector<T> alpha(g), sigma(g), lp(g);
  mdn_transform<T>(a_raw, s_raw, alpha, sigma, smin, smax);
  const T log_alpha_norm = detail::log_sum_exp<T>(a_raw);
  for (size_t i = 0; i < g; ++i) {
    const T z = (x - mu[i]) / sigma[i];
    lp[i] = (a_raw[i] - log_alpha_norm) - std::log(sigma[i]) - kHalfLog2Pi -
            T(0.5) * z * z;
  }
  const T lse = detail::log_sum_exp<T>(lp);
  for (size_t i = 0; i < g; ++i) {
    const T r = std::exp(lp[i] - lse);
    const T z = (x - mu[i]) / sigma[i];
    ga[i] = alpha[i] - r;
    gmu[i] = r * (mu[i] - x) / (sigma[i] * sigma[i]);
    const T sig_unclamped = std::exp(s_raw[i]);
    const bool clamped = sig_unclamped < smin || sig_unclamped > smax;
    gs[i] = clamped ? T(0) : r * (T(1) - z * z);
  }
  return -lse;
}

// Cross entropy -log softmax(logits)[target].
template <typename T>
T softmax_ce(std::span<const T> logits, int target) {
  return detail::log_sum_exp<T>(logits) - logits[target];
}

// Cross entropy with gradient w.r.t. logits: softmax(logits) - onehot(target).
template <typename T>
T softmax_ce_grad(std::span<const T> logits, int target, std::span<T> glogits) {
  const T lse = detail::log_sum_exp<T>(logits);
  for (size_t i = 0; i < logits.size(); ++i)
    glogits[i] = std::exp(logits[i] - lse);
  glogits[target] -= T(1);
  return lse - logits[target];
}

}  // namespace nn
}  // namespace stan
