#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "stan/flow.hpp"
#include "stan/rng.hpp"

namespace stan {

struct TaskDataset {
  size_t n = 0;
  int d = 0;
  std::vector<double> x;  // n * d, row-major
  std::vector<double> y;  // class index or regression target

  const double* row(size_t i) const { return x.data() + i * d; }
  void append(std::span<const double> features, double target);
};

// Protocol classification: predict pr from
// td, pkt, byt, sp category, dp category and the six flag bits.
TaskDataset build_protocol_task(const std::vector<FlowRecord>& flows);

// Byte-volume forecasting: within each source IP's flow sequence (ordered by
// te), the previous `lag` byt values (min-max scaled) predict the next one.
struct ByteScale {
  double lo = 0, hi = 1;
  double scale(double v) const;
};
ByteScale fit_byte_scale(const std::vector<FlowRecord>& flows);
TaskDataset build_bytes_task(const std::vector<FlowRecord>& flows, int lag,
                             const ByteScale& scale);

// Macro-averaged F1.  Classes absent from both prediction and truth are
// excluded; a class with zero precision+recall contributes 0.
double macro_f1(std::span<const int> predicted, std::span<const int> truth);

double mean_squared_error(std::span<const double> predicted,
                          std::span<const double> truth);

// --------------------------------------------------------------------------
// Random forest classifier (gini, bootstrap, sqrt(d) feature subsampling)
// --------------------------------------------------------------------------
struct ForestConfig {
  int trees = 50;
  int max_depth = 12;
  int min_samples_leaf = 2;
  uint64_t seed = 1;
};

class RandomForestClassifier {
 public:
  void fit(const TaskDataset& data, const ForestConfig& cfg);
  int predict_one(const double* x) const;
  std::vector<int> predict(const TaskDataset& data) const;
  int num_classes() const { return classes_; }

 private:
  struct Node {
    int feature = -1;  // -1 = leaf
    double threshold = 0;
    int left = -1, right = -1;
    int label = -1;
  };
  int grow(std::vector<Node>& tree, std::vector<size_t>& idx, size_t begin,
           size_t end, int depth, const TaskDataset& data, Rng& rng);

  std::vector<std::vector<Node>> trees_;
  ForestConfig cfg_;
  int classes_ = 0;
  int d_ = 0;
};

// --------------------------------------------------------------------------
// Small dense regressor (one hidden ReLU layer, Adam, MSE)
// --------------------------------------------------------------------------
struct MlpConfig {
  int hidden = 32;
  int epochs = 50;
  int batch_size = 128;
  double lr = 1e-3;
  uint64_t seed = 1;
};

class MlpRegressor {
 public:
  void fit(const TaskDataset& data, const MlpConfig& cfg);
  std::vector<double> predict(const TaskDataset& data) const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  int d_ = 0;
};

// Train-on-one-set, test-on-another convenience wrappers.
double evaluate_protocol_task(const TaskDataset& train, const TaskDataset& test,
                              const ForestConfig& cfg);
double evaluate_bytes_task(const TaskDataset& train, const TaskDataset& test,
                           const MlpConfig& cfg);

// --------------------------------------------------------------------------
// Substitution curve: replace real training data with synthetic
// --------------------------------------------------------------------------
enum class TaskKind { kProtocol, kBytes };

struct CurveConfig {
  std::vector<double> fractions = {0.0, 0.25, 0.5, 0.75, 1.0};
  int folds = 5;
  uint64_t seed = 1;
  TaskKind task = TaskKind::kProtocol;
  int lag = 8;
  ForestConfig forest;
  MlpConfig mlp;
};

struct CurvePoint {
  double fraction = 0;
  double mean = 0;
  double stddev = 0;            // sample stddev over synthetic sets
  std::vector<double> per_set;  // fold-averaged metric per synthetic set

  nlohmann::json to_json() const;
};

// For each fraction f: train on f*N real + (1-f)*N synthetic examples
// (N = the fold's real training-pool size) and evaluate on the held-out real
// fold; metrics are averaged over folds, then summarized over synthetic sets.
// At f = 1 no synthetic data enters, so every set yields the identical
// real-only baseline.  Throws if a synthetic set cannot supply (1-f)*N
// examples.
std::vector<CurvePoint> substitution_curve(
    const std::vector<FlowRecord>& real,
    const std::vector<std::vector<FlowRecord>>& synth_sets,
    const CurveConfig& cfg);

}  // namespace stan
