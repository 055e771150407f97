#pragma once

#include <span>
#include <string>
#include <vector>

#include "stan/gmm.hpp"

namespace stan {

// Equal-frequency binning: edges[0] / edges[bins] are the data min/max and
// interior edges sit at evenly spaced quantiles.  Bin b covers
// (edges[b], edges[b+1]]; values at or below the minimum land in bin 0 and
// values above the maximum in the last bin.
struct FreqBins {
  std::vector<double> edges;

  static FreqBins fit(std::span<const double> values, int bins);
  int count() const { return static_cast<int>(edges.size()) - 1; }
  int index(double v) const;
  double lo(int b) const { return edges[b]; }
  double hi(int b) const { return edges[b + 1]; }
};

struct BnConfig {
  std::string child = "byt";    // modeled dependent attribute
  std::string parent = "pkt";   // same-row parent
  int parent_bins = 16;         // bins for each conditioning variable
  int value_bins = 64;          // bins of the child's conditional histogram
  bool dependence = true;       // false: child falls back to its mixture
  EmConfig em;                  // embedded per-attribute mixture settings

  nlohmann::json to_json() const;
  static BnConfig from_json(const nlohmann::json& j);
};

// Two-parent Bayesian-network baseline.  The child attribute (byt) is drawn
// from a conditional histogram given (previous-row child value, same-row
// parent value), each discretized into equal-frequency bins; every other
// attribute uses the independent per-attribute model.  Cells are add-one
// smoothed; unseen cells and the first row fall back to the child's marginal
// histogram.  With dependence disabled the child delegates to its mixture,
// making the model coincide with the independent baseline.
class BnModel {
 public:
  BnModel() = default;

  static BnModel fit(const DataTable& data, const BnConfig& cfg,
                     std::vector<std::string>* warnings = nullptr);

  const AttributeSchema& schema() const { return gmm_.schema(); }
  const GmmModel& marginals() const { return gmm_; }
  const BnConfig& config() const { return cfg_; }
  int child_index() const { return j_child_; }
  int parent_index() const { return j_parent_; }

  DataTable sample_table(size_t n, Rng& rng) const;
  std::vector<FlowRecord> sample_flows(const GenerateOptions& opt,
                                       Rng& rng) const;

  // Probability mass of the child lying in (lo, hi] conditioned on the
  // previous-row child value and the same-row parent value.  Pass NaN as
  // prev_value for a first row (uses the marginal histogram).
  double child_bin_mass(double prev_value, double parent_value, double lo,
                        double hi) const;

  void save(const std::string& path) const;
  static BnModel load(const std::string& path);

 private:
  const std::vector<double>& cell(double prev_value, double parent_value) const;
  double sample_child(double prev_value, double parent_value, Rng& rng) const;
  double hist_bin_mass(const std::vector<double>& counts, double lo,
                       double hi) const;

  GmmModel gmm_;
  BnConfig cfg_;
  int j_child_ = -1, j_parent_ = -1;
  FreqBins prev_bins_, parent_bins_, value_bins_;
  std::vector<std::vector<double>> cells_;  // [prev*P + parent][value_bin]
  std::vector<double> marginal_;            // [value_bin]
};

}  // namespace stan
