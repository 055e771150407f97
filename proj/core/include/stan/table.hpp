#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "stan/flow.hpp"
#include "stan/rng.hpp"
#include "stan/schema.hpp"
#include "stan/tensor.hpp"

namespace stan {

// Row-major table of expanded attribute values in model units:
// continuous columns hold raw values (dt/td seconds, pkt/byt counts),
// categorical columns hold category indices (octet value, port category,
// protocol index, flag index).
class DataTable {
 public:
  DataTable() = default;
  explicit DataTable(AttributeSchema schema) : schema_(std::move(schema)) {}

  const AttributeSchema& schema() const { return schema_; }
  size_t rows() const { return rows_; }
  int cols() const { return schema_.num_expanded(); }

  double at(size_t i, int j) const { return v_[i * cols() + j]; }
  double& at(size_t i, int j) { return v_[i * cols() + j]; }

  void reserve(size_t n) { v_.reserve(n * cols()); }
  void append_row(std::span<const double> values);
  // Copies rows [begin, end) into a new table.
  DataTable slice(size_t begin, size_t end) const;
  // Materializes column j.
  std::vector<double> column(int j) const;

 private:
  AttributeSchema schema_;
  size_t rows_ = 0;
  std::vector<double> v_;
};

// Converts flows (sorted by te) to a table.  The te attribute becomes the
// delta to the previous row (first row 0); negative deltas clamp to 0.
DataTable flows_to_table(const std::vector<FlowRecord>& flows,
                         const AttributeSchema& schema);

// Decodes one raw table row into a flow record.
//   te  = prev_te + max(dt, 0)
//   td  = max(td, 0)
//   pkt, byt round to the nearest integer, minimum 1
//   port categories >= 1024 draw uniformly from the covered port range
FlowRecord decode_row(const DataTable& t, size_t i, double prev_te, Rng& rng);

// Decodes a whole raw table into flows; row 0 is offset from start_te.
std::vector<FlowRecord> table_to_flows(const DataTable& t, double start_te,
                                       Rng& rng);

// Stop conditions shared by every generator.  At least one of rows/horizon
// must be set; max_rows is a safety cap for horizon-only runs.
struct GenerateOptions {
  size_t rows = 0;      // stop after this many flows (0 = unbounded)
  double horizon = 0;   // stop once te exceeds start_te + horizon seconds
  double start_te = 0;  // timestamp baseline for the first row
  size_t max_rows = 0;
};

// Min-max ranges per expanded attribute.  Continuous ranges come from data;
// categorical ranges are fixed at [0, cardinality-1] so that scalar context
// encoding of octets and port categories is v / (C-1).
struct ScalerParams {
  struct Range {
    double lo = 0, hi = 0;
  };
  std::vector<Range> ranges;

  static ScalerParams fit(const DataTable& t);

  // (v - lo) / (hi - lo), clamped to [0, 1].  A degenerate range (hi == lo)
  // maps every value to 0.  Increments *clamped when the input lay outside.
  double scale(int j, double v, size_t* clamped = nullptr) const;
  double unscale(int j, double s) const;

  nlohmann::json to_json() const;
  static ScalerParams from_json(const nlohmann::json& j);
};

// Encodes row i as one context-window row of schema.width() floats:
// one-hot attributes (protocol, flags) expand to indicator columns, all other
// attributes occupy one min-max scaled column.  Returns the number of values
// clamped into [0, 1].
size_t encode_row(const DataTable& t, size_t i, const ScalerParams& scalers,
                  float* out);

// Encodes every row; result has t.rows() * width floats.
std::vector<float> encode_table(const DataTable& t, const ScalerParams& scalers,
                                size_t* clamped = nullptr);

// Sliding context windows over encoded rows.  window i = encoded rows
// [i-k, i]; rows with index < 0 are zeros.  Height k+1, width W.
class WindowBuilder {
 public:
  WindowBuilder(const float* rows, size_t n, int width, int k);

  nn::Shape window_shape() const { return {1, 1, k_ + 1, width_}; }
  size_t count() const { return n_; }
  // Writes (k+1) * width floats for the window ending at row i.
  void fill(size_t i, float* dst) const;
  // Stacks windows for the given row indices into a (B, 1, k+1, W) tensor.
  nn::Tensor batch(std::span<const size_t> rows) const;

 private:
  const float* rows_;
  size_t n_;
  int width_, k_;
};

}  // namespace stan
