#pragma once

#include <span>
#include <string>
#include <vector>

#include "stan/mdn.hpp"
#include "stan/table.hpp"

namespace stan {

struct EmConfig {
  int components = 10;
  int max_iters = 100;
  double tol = 1e-6;  // convergence threshold on mean log-likelihood change
};

struct EmResult {
  MixtureParams mixture;
  bool converged = false;
  int iters = 0;
  double mean_log_likelihood = 0;
};

// Fits a 1-D Gaussian mixture by expectation-maximization.  Initialization is
// deterministic (means at evenly spaced quantiles, uniform weights, pooled
// stddev); variances are floored to avoid collapse onto single points.  When
// the data has fewer distinct values than components the fit degrades
// gracefully to fewer effective components.
EmResult fit_mixture_em(std::span<const double> values, const EmConfig& cfg);

// Category histogram with add-one (Laplace) smoothing for sampling and
// probability mass; raw counts stay available for evaluation.
class CategoricalCounts {
 public:
  CategoricalCounts() = default;
  explicit CategoricalCounts(int cardinality) : counts_(cardinality, 0.0) {}
  static CategoricalCounts from_counts(std::vector<double> counts);

  void add(int c) { counts_.at(c) += 1.0; total_ += 1.0; }
  int cardinality() const { return static_cast<int>(counts_.size()); }
  double total() const { return total_; }
  const std::vector<double>& counts() const { return counts_; }

  // Raw empirical frequencies (no smoothing).
  std::vector<double> frequencies() const;
  // Add-one smoothed probability of category c.
  double smoothed(int c) const;
  std::vector<double> smoothed_probs() const;
  int sample(Rng& rng) const;

 private:
  std::vector<double> counts_;
  double total_ = 0;
};

// Independent per-attribute baseline: a Gaussian mixture for each continuous
// expanded attribute (fit on raw values) and a smoothed category histogram
// for each categorical one.  Rows are sampled independently.
class GmmModel {
 public:
  GmmModel() = default;

  static GmmModel fit(const DataTable& data, const EmConfig& em,
                      std::vector<std::string>* warnings = nullptr);

  const AttributeSchema& schema() const { return schema_; }
  const MixtureParams& mixture(int j) const;
  const CategoricalCounts& counts(int j) const;
  const std::vector<EmResult>& em_results() const { return em_info_; }

  DataTable sample_table(size_t n, Rng& rng) const;
  std::vector<FlowRecord> sample_flows(const GenerateOptions& opt,
                                       Rng& rng) const;

  // Probability mass of (lo, hi] under a continuous attribute's mixture.
  double bin_mass(int j, double lo, double hi) const;
  // Smoothed probability of category c for a categorical attribute.
  double category_mass(int j, int c) const;

  void save(const std::string& path) const;
  static GmmModel load(const std::string& path);
  // Full model state as JSON (schema, mixtures, counts); used by save() and
  // by models that embed this one.
  nlohmann::json to_json() const;
  static GmmModel from_json(const nlohmann::json& j);

 private:
  double sample_value(int j, Rng& rng) const;

  AttributeSchema schema_;
  std::vector<MixtureParams> mix_;       // empty() for categorical columns
  std::vector<CategoricalCounts> cat_;   // cardinality 0 for continuous
  std::vector<EmResult> em_info_;
  int em_components_ = 0;

  friend class BnModel;
};

}  // namespace stan
