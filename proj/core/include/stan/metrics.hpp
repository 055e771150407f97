#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stan/bayes_net.hpp"
#include "stan/gmm.hpp"
#include "stan/model.hpp"
#include "stan/table.hpp"

namespace stan {

// --------------------------------------------------------------------------
// Histograms and divergence
// --------------------------------------------------------------------------
std::vector<double> equal_width_edges(double lo, double hi, int bins);

// Normalized mass per bin; bin b is (edges[b], edges[b+1]] with the minimum
// falling into bin 0.  Values outside the edge range clamp into the end bins.
std::vector<double> histogram_mass(std::span<const double> values,
                                   const std::vector<double>& edges);

// Normalized mass per category index 0..cardinality-1.
std::vector<double> categorical_mass(std::span<const double> values,
                                     int cardinality);

// Jensen-Shannon divergence in bits between two distributions on the same
// support.  Symmetric, finite, bounded by 1.  Both inputs must sum to 1.
double jensen_shannon_divergence(std::span<const double> p,
                                 std::span<const double> q);

// Per-attribute JSD between two tables over the same schema.  Continuous
// attributes are binned into `bins` equal-width bins spanning the union of
// both column ranges.
struct DistributionComparison {
  std::string attribute;
  double jsd = 0;
};
std::vector<DistributionComparison> compare_tables(const DataTable& a,
                                                   const DataTable& b,
                                                   int bins = 50);

// --------------------------------------------------------------------------
// Attribute negative log-likelihood (natural log)
// --------------------------------------------------------------------------
// Shared discretization: continuous attributes get equal-width bins covering
// the union of both tables' ranges; categorical attributes use their
// categories directly.
struct NllBinning {
  int bins = 100;
  // Per expanded attribute: bin edges (bins+1) for continuous, empty for
  // categorical.
  std::vector<std::vector<double>> edges;

  // Bin index of value v for attribute j.
  int index(int j, double v) const;
};

NllBinning make_nll_binning(const DataTable& a, const DataTable& b,
                            int bins = 100);

// A model's per-attribute predictive distribution, discretized.  Row context
// is passed so that autoregressive models can condition on the true previous
// rows (teacher forcing).
class AttributeDensity {
 public:
  virtual ~AttributeDensity() = default;
  // Mass of (lo, hi] for continuous attribute j at row i.
  virtual double bin_mass(const DataTable& data, size_t i, int j, double lo,
                          double hi) const = 0;
  // Mass of category c for categorical attribute j at row i.
  virtual double category_mass(const DataTable& data, size_t i, int j,
                               int c) const = 0;
};

struct NllReport {
  std::vector<std::string> names;  // expanded attribute names
  std::vector<double> nll;         // mean NLL in nats, aligned with names
  size_t floored = 0;              // bins that hit the probability floor

  double get(const std::string& name) const;
  nlohmann::json to_json() const;
};

// Mean negative log-likelihood of each attribute of `data` under `density`,
// using the given discretization.  Probabilities are floored at 1e-12.
NllReport attribute_nll(const AttributeDensity& density, const DataTable& data,
                        const NllBinning& binning);

// Histogram density of a reference table: mass = empirical bin frequency.
// Evaluating a table against its own empirical density recovers the entropy
// of the discretized attribute.
class EmpiricalDensity : public AttributeDensity {
 public:
  EmpiricalDensity(const DataTable& reference, const NllBinning& binning);
  double bin_mass(const DataTable&, size_t, int j, double lo,
                  double hi) const override;
  double category_mass(const DataTable&, size_t, int j, int c) const override;

 private:
  const NllBinning& binning_;
  std::vector<std::vector<double>> mass_;  // per attribute, per bin/category
};

class GmmDensity : public AttributeDensity {
 public:
  explicit GmmDensity(const GmmModel& model) : model_(model) {}
  double bin_mass(const DataTable&, size_t, int j, double lo,
                  double hi) const override;
  double category_mass(const DataTable&, size_t, int j, int c) const override;

 private:
  const GmmModel& model_;
};

// The dependence model: the child attribute is scored against its
// conditional histogram given the true previous-row child and same-row
// parent; everything else delegates to the embedded per-attribute model.
class BnDensity : public AttributeDensity {
 public:
  explicit BnDensity(const BnModel& model) : model_(model) {}
  double bin_mass(const DataTable& data, size_t i, int j, double lo,
                  double hi) const override;
  double category_mass(const DataTable&, size_t, int j, int c) const override;

 private:
  const BnModel& model_;
};

// Teacher-forced network density: head distributions are computed once for
// every row of the evaluation table using the true context windows.
// Continuous masses are evaluated in the model's scaled space (the min-max
// map is affine, so bin masses are preserved).
class StanDensity : public AttributeDensity {
 public:
  StanDensity(const StanModel& model, const DataTable& data,
              int batch_size = 256);
  double bin_mass(const DataTable&, size_t i, int j, double lo,
                  double hi) const override;
  double category_mass(const DataTable&, size_t i, int j, int c) const override;

 private:
  const StanModel& model_;
  // Per expanded attribute: mixtures per row (continuous) or the probability
  // of the observed category per row (categorical).
  std::vector<std::vector<MixtureParams>> mixtures_;
  std::vector<std::vector<double>> observed_prob_;
};

// --------------------------------------------------------------------------
// Flow-level summaries
// --------------------------------------------------------------------------
// Per-user activity; a "user" is any IP observed as source or destination.
struct UserActivity {
  std::vector<uint32_t> users;       // sorted IP keys
  std::vector<double> unique_peers;  // distinct counterpart IPs per user
  std::vector<double> byte_volume;   // summed byt over the user's flows
};
UserActivity user_activity(const std::vector<FlowRecord>& flows);

struct PortShare {
  int port = 0;
  double share = 0;  // fraction of the protocol's flows with this dp
};
// Destination ports ranked by share within one protocol, filtered to shares
// of at least min_share.
std::vector<PortShare> top_ports(const std::vector<FlowRecord>& flows,
                                 Protocol pr, double min_share = 0.01,
                                 size_t limit = 10);

}  // namespace stan
