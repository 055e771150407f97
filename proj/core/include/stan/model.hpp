#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stan/mdn.hpp"
#include "stan/net.hpp"
#include "stan/table.hpp"

namespace stan {

// Same-row visibility mask applied to the last (current) row of each context
// window.
//  - kA: the whole current row is hidden; same-row attributes are
//    conditionally independent given the k preceding rows.
//  - kB: attributes are sampled left to right in generation order; the head
//    for column j sees earlier same-row columns, while j and
//    everything after it are hidden.
enum class MaskKind { kA, kB };

std::string mask_name(MaskKind m);
MaskKind mask_from_name(const std::string& s);

// Zeroes hidden current-row columns in a batch of windows (B, 1, k+1, W).
// `head` is the expanded-attribute index whose head will consume the result.
void apply_mask(nn::Tensor& windows, MaskKind mask,
                const AttributeSchema& schema, int head);

// Convolutional trunk description.  naive = no trunk at all: the heads see
// the flattened masked window directly.  Otherwise each block is a list of
// 3x3 conv filter counts followed by batchnorm, relu and 2x2 max pooling.
struct TrunkConfig {
  bool naive = false;
  std::vector<std::vector<int>> blocks = {{32, 32}, {64, 64}, {128, 128}};

  nn::NetworkSpec spec() const;
  nlohmann::json to_json() const;
  static TrunkConfig from_json(const nlohmann::json& j);
};

struct TrainConfig {
  MaskKind mask = MaskKind::kB;
  int k = 10;           // context rows preceding the current row
  int components = 10;  // mixture components per continuous head
  int epochs = 30;
  int batch_size = 512;
  int patience = 5;     // epochs without val improvement before stopping
  double lr_mdn = 1e-3;
  double lr_softmax = 1e-2;
  double val_fraction = 0.1;  // trailing fraction of rows held out
  uint64_t seed = 1;
  int threads = 1;  // attribute heads trained in parallel
  TrunkConfig trunk;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  void validate() const;
};

struct EpochStats {
  double train_loss = 0, val_loss = 0;
};

struct HeadLog {
  std::string name;
  bool mdn = false;
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // epoch whose parameters were kept
  double best_val = 0;
  int64_t steps = 0;
};

struct TrainLog {
  std::vector<HeadLog> heads;
  size_t rows = 0;
  size_t clamped_values = 0;
  double seconds = 0;
  nlohmann::json to_json() const;
};

// Autoregressive generator over a flow table.  One network head per expanded
// attribute: continuous columns get mixture-density heads, categorical
// columns get softmax heads.  All heads share the same architecture but are
// trained independently (which makes head-parallel training deterministic).
class StanModel {
 public:
  StanModel() = default;
  StanModel(StanModel&&) = default;
  StanModel& operator=(StanModel&&) = default;

  // Trains on rows of `data` (already sorted by time).  The trailing
  // val_fraction of rows is held out for early stopping.
  static StanModel train(const DataTable& data, const TrainConfig& cfg,
                         TrainLog* log = nullptr);

  // Samples `rows` table rows in model units (raw seconds/counts, category
  // indices).  Works for any schema.
  DataTable generate_table(size_t rows, Rng& rng) const;

  // Netflow-schema models only.  At least one stop condition is required.
  std::vector<FlowRecord> generate_flows(const GenerateOptions& opt,
                                         Rng& rng) const;

  // Teacher-forced head distributions for an unmasked window (1, 1, k+1, W);
  // the mask is applied internally.  head_mixture returns scaled-space
  // mixture parameters for a continuous head; head_categorical returns the
  // probability vector of a categorical head.
  MixtureParams head_mixture(const nn::Tensor& window, int head) const;
  std::vector<double> head_categorical(const nn::Tensor& window,
                                       int head) const;
  // Batched variant over (B, 1, k+1, W) for continuous heads.
  std::vector<MixtureParams> head_mixture_batch(const nn::Tensor& windows,
                                                int head) const;

  const AttributeSchema& schema() const { return schema_; }
  const ScalerParams& scalers() const { return scalers_; }
  const TrainConfig& config() const { return cfg_; }
  int k() const { return cfg_.k; }

  void save(const std::string& path) const;
  static StanModel load(const std::string& path);

 private:
  struct Head {
    int j = 0;
    std::string name;
    bool mdn = false;
    nn::Net trunk;
    std::unique_ptr<nn::DenseLayer> alpha, mu, sraw;  // mixture head
    std::unique_ptr<nn::DenseLayer> logits;           // softmax head

    std::vector<nn::ParamRef> params();
    std::vector<nn::ParamRef> all_tensors();  // params + batchnorm state
    const nn::Tensor& features(const nn::Tensor& x, bool train);
  };

  void build_heads();
  void train_head(Head& head, const DataTable& data,
                  const std::vector<float>& rows, HeadLog* log);
  // Samples one row; fills `encoded` (the current window row) and `raw` (the
  // model-unit row values).
  void sample_row(std::vector<float>& window, std::vector<double>& raw,
                  Rng& rng) const;

  AttributeSchema schema_;
  ScalerParams scalers_;
  TrainConfig cfg_;
  mutable std::vector<Head> heads_;  // nets cache activations during forward
};

}  // namespace stan
