#include "stan/table.hpp"

#include <algorithm>
#include <cmath>

namespace stan {

void DataTable::append_row(std::span<const double> values) {
  if (static_cast<int>(values.size()) != cols())
    throw ShapeError("append_row: expected " + std::to_string(cols()) +
                     " values, got " + std::to_string(values.size()));
  v_.insert(v_.end(), values.begin(), values.end());
  ++rows_;
}

DataTable DataTable::slice(size_t begin, size_t end) const {
  if (begin > end || end > rows_) throw Error("slice: bad range");
  DataTable out(schema_);
  out.v_.assign(v_.begin() + begin * cols(), v_.begin() + end * cols());
  out.rows_ = end - begin;
  return out;
}

std::vector<double> DataTable::column(int j) const {
  if (j < 0 || j >= cols()) throw Error("column: index out of range");
  std::vector<double> out(rows_);
  for (size_t i = 0; i < rows_; ++i) out[i] = at(i, j);
  return out;
}

DataTable flows_to_table(const std::vector<FlowRecord>& flows,
                         const AttributeSchema& schema) {
  DataTable t(schema);
  t.reserve(flows.size());
  std::vector<double> row(schema.num_expanded());
  double prev_te = 0;
  for (size_t i = 0; i < flows.size(); ++i) {
    const FlowRecord& f = flows[i];
    for (const ExpandedAttribute& e : schema.expanded()) {
      double v = 0;
      const std::string& base = schema.attributes()[e.base].name;
      switch (e.kind) {
        case AttrKind::kTimeDelta:
          v = i == 0 ? 0.0 : std::max(0.0, f.te - prev_te);
          break;
        case AttrKind::kContinuous:
          if (base == "td") v = f.td;
          else if (base == "pkt") v = static_cast<double>(f.pkt);
          else if (base == "byt") v = static_cast<double>(f.byt);
          else throw Error("unknown continuous flow attribute '" + base + "'");
          break;
        case AttrKind::kIp:
          v = (base == "da" ? f.da : f.sa)[e.sub];
          break;
        case AttrKind::kPort:
          v = port_to_category(base == "dp" ? f.dp : f.sp);
          break;
        case AttrKind::kCategorical:
          v = static_cast<double>(static_cast<int>(f.pr));
          break;
        case AttrKind::kFlags:
          v = f.flg.index();
          break;
      }
      row[&e - schema.expanded().data()] = v;
    }
    t.append_row(row);
    prev_te = f.te;
  }
  return t;
}

FlowRecord decode_row(const DataTable& t, size_t i, double prev_te, Rng& rng) {
  const AttributeSchema& schema = t.schema();
  if (!schema.is_netflow())
    throw Error("decode_row: schema is not the canonical netflow schema");
  FlowRecord f;
  for (int j = 0; j < schema.num_expanded(); ++j) {
    const ExpandedAttribute& e = schema.expanded()[j];
    const std::string& base = schema.attributes()[e.base].name;
    const double v = t.at(i, j);
    switch (e.kind) {
      case AttrKind::kTimeDelta:
        f.te = prev_te + std::max(0.0, v);
        break;
      case AttrKind::kContinuous: {
        if (base == "td") {
          f.td = std::max(0.0, v);
        } else {
          const uint64_t n =
              static_cast<uint64_t>(std::max<long long>(1, std::llround(v)));
          if (base == "pkt") f.pkt = n;
          else f.byt = n;
        }
        break;
      }
      case AttrKind::kIp: {
        const int octet = std::clamp(static_cast<int>(std::lround(v)), 0, 255);
        (base == "da" ? f.da : f.sa)[e.sub] = static_cast<uint8_t>(octet);
        break;
      }
      case AttrKind::kPort: {
        int lo, hi;
        port_category_range(static_cast<int>(std::lround(v)), &lo, &hi);
        const int port =
            lo == hi ? lo
                     : lo + static_cast<int>(rng.integer(
                                static_cast<uint64_t>(hi - lo + 1)));
        if (base == "dp") f.dp = static_cast<uint16_t>(port);
        else f.sp = static_cast<uint16_t>(port);
        break;
      }
      case AttrKind::kCategorical:
        f.pr = static_cast<Protocol>(
            std::clamp(static_cast<int>(std::lround(v)), 0, 2));
        break;
      case AttrKind::kFlags:
        f.flg = TcpFlags::from_index(
            std::clamp(static_cast<int>(std::lround(v)), 0, 63));
        break;
    }
  }
  return f;
}

std::vector<FlowRecord> table_to_flows(const DataTable& t, double start_te,
                                       Rng& rng) {
  std::vector<FlowRecord> flows;
  flows.reserve(t.rows());
  double prev_te = start_te;
  for (size_t i = 0; i < t.rows(); ++i) {
    flows.push_back(decode_row(t, i, prev_te, rng));
    prev_te = flows.back().te;
  }
  return flows;
}

ScalerParams ScalerParams::fit(const DataTable& t) {
  if (t.rows() == 0) throw Error("ScalerParams::fit: empty table");
  ScalerParams s;
  const auto& expanded = t.schema().expanded();
  s.ranges.resize(expanded.size());
  for (size_t j = 0; j < expanded.size(); ++j) {
    if (expanded[j].cardinality > 0) {
      s.ranges[j] = {0.0, static_cast<double>(expanded[j].cardinality - 1)};
    } else {
      double lo = t.at(0, static_cast<int>(j)), hi = lo;
      for (size_t i = 1; i < t.rows(); ++i) {
        const double v = t.at(i, static_cast<int>(j));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      s.ranges[j] = {lo, hi};
    }
  }
  return s;
}

double ScalerParams::scale(int j, double v, size_t* clamped) const {
  const Range& r = ranges[j];
  if (r.hi <= r.lo) return 0.0;
  double s = (v - r.lo) / (r.hi - r.lo);
  if (s < 0.0 || s > 1.0) {
    if (clamped) ++*clamped;
    s = std::clamp(s, 0.0, 1.0);
  }
  return s;
}

double ScalerParams::unscale(int j, double s) const {
  const Range& r = ranges[j];
  return r.lo + s * (r.hi - r.lo);
}

nlohmann::json ScalerParams::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const Range& r : ranges) arr.push_back({r.lo, r.hi});
  return arr;
}

ScalerParams ScalerParams::from_json(const nlohmann::json& j) {
  ScalerParams s;
  for (const auto& e : j)
    s.ranges.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
  return s;
}

size_t encode_row(const DataTable& t, size_t i, const ScalerParams& scalers,
                  float* out) {
  const AttributeSchema& schema = t.schema();
  size_t clamped = 0;
  std::fill(out, out + schema.width(), 0.0f);
  for (int j = 0; j < schema.num_expanded(); ++j) {
    const ExpandedAttribute& e = schema.expanded()[j];
    const double v = t.at(i, j);
    if (e.onehot) {
      int idx = static_cast<int>(std::lround(v));
      if (idx < 0 || idx >= e.cardinality) {
        ++clamped;
        idx = std::clamp(idx, 0, e.cardinality - 1);
      }
      out[e.col + idx] = 1.0f;
    } else {
      out[e.col] = static_cast<float>(scalers.scale(j, v, &clamped));
    }
  }
  return clamped;
}

std::vector<float> encode_table(const DataTable& t, const ScalerParams& scalers,
                                size_t* clamped) {
  const int w = t.schema().width();
  std::vector<float> rows(t.rows() * static_cast<size_t>(w));
  size_t total = 0;
  for (size_t i = 0; i < t.rows(); ++i)
    total += encode_row(t, i, scalers, rows.data() + i * w);
  if (clamped) *clamped = total;
  return rows;
}

WindowBuilder::WindowBuilder(const float* rows, size_t n, int width, int k)
    : rows_(rows), n_(n), width_(width), k_(k) {
  if (k <= 0) throw Error("window size k must be positive");
}

void WindowBuilder::fill(size_t i, float* dst) const {
  if (i >= n_) throw Error("window row out of range");
  for (int r = 0; r <= k_; ++r) {
    const long src = static_cast<long>(i) - k_ + r;
    float* drow = dst + static_cast<size_t>(r) * width_;
    if (src < 0)
      std::fill(drow, drow + width_, 0.0f);
    else
      std::copy(rows_ + static_cast<size_t>(src) * width_,
                rows_ + (static_cast<size_t>(src) + 1) * width_, drow);
  }
}

nn::Tensor WindowBuilder::batch(std::span<const size_t> rows) const {
  nn::Tensor out({static_cast<int>(rows.size()), 1, k_ + 1, width_});
  for (size_t b = 0; b < rows.size(); ++b)
    fill(rows[b], out.data() + b * static_cast<size_t>(k_ + 1) * width_);
  return out;
}

}  // namespace stan
