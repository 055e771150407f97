#include "stan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace stan {

namespace {
constexpr double kMassFloor = 1e-12;
}

std::vector<double> equal_width_edges(double lo, double hi, int bins) {
  if (bins <= 0) throw Error("bin count must be positive");
  if (!(hi >= lo)) throw Error("equal_width_edges: hi < lo");
  std::vector<double> edges(bins + 1);
  for (int b = 0; b <= bins; ++b)
    edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
  edges[0] = lo;
  edges[bins] = hi;
  return edges;
}

namespace {
int edge_index(const std::vector<double>& edges, double v) {
  const auto begin = edges.begin() + 1, end = edges.end() - 1;
  return static_cast<int>(std::lower_bound(begin, end, v) - begin);
}
}  // namespace

std::vector<double> histogram_mass(std::span<const double> values,
                                   const std::vector<double>& edges) {
  if (values.empty()) throw Error("histogram_mass: no data");
  std::vector<double> mass(edges.size() - 1, 0.0);
  for (double v : values) mass[edge_index(edges, v)] += 1.0;
  for (double& m : mass) m /= static_cast<double>(values.size());
  return mass;
}

std::vector<double> categorical_mass(std::span<const double> values,
                                     int cardinality) {
  if (values.empty()) throw Error("categorical_mass: no data");
  std::vector<double> mass(cardinality, 0.0);
  for (double v : values) {
    const int c = static_cast<int>(std::lround(v));
    if (c < 0 || c >= cardinality)
      throw Error("category index " + std::to_string(c) + " out of range");
    mass[c] += 1.0;
  }
  for (double& m : mass) m /= static_cast<double>(values.size());
  return mass;
}

double jensen_shannon_divergence(std::span<const double> p,
                                 std::span<const double> q) {
  if (p.size() != q.size())
    throw Error("JSD requires distributions on the same support");
  double sp = 0, sq = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0 || q[i] < 0) throw Error("JSD: negative probability");
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6)
    throw Error("JSD: inputs must be normalized");
  double d = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) d += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0) d += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return std::max(0.0, d);
}

std::vector<DistributionComparison> compare_tables(const DataTable& a,
                                                   const DataTable& b,
                                                   int bins) {
  if (!(a.schema() == b.schema()))
    throw Error("compare_tables: schemas differ");
  if (a.rows() == 0 || b.rows() == 0)
    throw Error("compare_tables: empty table");
  std::vector<DistributionComparison> out;
  std::vector<double> va, vb;
  for (int j = 0; j < a.schema().num_expanded(); ++j) {
    const ExpandedAttribute& e = a.schema().expanded()[j];
    va.resize(a.rows());
    vb.resize(b.rows());
    for (size_t i = 0; i < a.rows(); ++i) va[i] = a.at(i, j);
    for (size_t i = 0; i < b.rows(); ++i) vb[i] = b.at(i, j);
    double jsd;
    if (e.cardinality == 0) {
      double lo = va[0], hi = va[0];
      for (double v : va) { lo = std::min(lo, v); hi = std::max(hi, v); }
      for (double v : vb) { lo = std::min(lo, v); hi = std::max(hi, v); }
      if (hi <= lo) {
        jsd = 0.0;  // both columns constant at the same value
      } else {
        const auto edges = equal_width_edges(lo, hi, bins);
        jsd = jensen_shannon_divergence(histogram_mass(va, edges),
                                        histogram_mass(vb, edges));
      }
    } else {
      jsd = jensen_shannon_divergence(categorical_mass(va, e.cardinality),
                                      categorical_mass(vb, e.cardinality));
    }
    out.push_back({e.name, jsd});
  }
  return out;
}

// --------------------------------------------------------------------------
// NLL
// --------------------------------------------------------------------------
int NllBinning::index(int j, double v) const {
  return edge_index(edges[j], v);
}

NllBinning make_nll_binning(const DataTable& a, const DataTable& b, int bins) {
  if (!(a.schema() == b.schema()))
    throw Error("make_nll_binning: schemas differ");
  if (a.rows() == 0 || b.rows() == 0)
    throw Error("make_nll_binning: empty table");
  NllBinning nb;
  nb.bins = bins;
  nb.edges.resize(a.schema().num_expanded());
  for (int j = 0; j < a.schema().num_expanded(); ++j) {
    if (a.schema().expanded()[j].cardinality > 0) continue;
    double lo = a.at(0, j), hi = lo;
    for (size_t i = 0; i < a.rows(); ++i) {
      lo = std::min(lo, a.at(i, j));
      hi = std::max(hi, a.at(i, j));
    }
    for (size_t i = 0; i < b.rows(); ++i) {
      lo = std::min(lo, b.at(i, j));
      hi = std::max(hi, b.at(i, j));
    }
    if (hi <= lo) hi = lo + 1.0;  // constant column: one unit-wide bin range
    nb.edges[j] = equal_width_edges(lo, hi, bins);
  }
  return nb;
}

double NllReport::get(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return nll[i];
  throw Error("no NLL entry for attribute '" + name + "'");
}

nlohmann::json NllReport::to_json() const {
  nlohmann::json per;
  for (size_t i = 0; i < names.size(); ++i) per[names[i]] = nll[i];
  return {{"per_attribute", per}, {"floored", floored}};
}

NllReport attribute_nll(const AttributeDensity& density, const DataTable& data,
                        const NllBinning& binning) {
  if (data.rows() == 0) throw Error("attribute_nll: empty table");
  NllReport report;
  const AttributeSchema& schema = data.schema();
  for (int j = 0; j < schema.num_expanded(); ++j) {
    const ExpandedAttribute& e = schema.expanded()[j];
    double total = 0;
    for (size_t i = 0; i < data.rows(); ++i) {
      double mass;
      if (e.cardinality == 0) {
        const auto& edges = binning.edges[j];
        const int b = binning.index(j, data.at(i, j));
        mass = density.bin_mass(data, i, j, edges[b], edges[b + 1]);
      } else {
        mass = density.category_mass(data, i, j,
                                     static_cast<int>(std::lround(data.at(i, j))));
      }
      if (!(mass >= kMassFloor)) {
        mass = kMassFloor;
        ++report.floored;
      }
      if (mass > 1.0) mass = 1.0;
      total -= std::log(mass);
    }
    report.names.push_back(e.name);
    report.nll.push_back(total / static_cast<double>(data.rows()));
  }
  return report;
}

EmpiricalDensity::EmpiricalDensity(const DataTable& reference,
                                   const NllBinning& binning)
    : binning_(binning) {
  if (reference.rows() == 0) throw Error("EmpiricalDensity: empty reference");
  const AttributeSchema& schema = reference.schema();
  mass_.resize(schema.num_expanded());
  for (int j = 0; j < schema.num_expanded(); ++j) {
    const ExpandedAttribute& e = schema.expanded()[j];
    const int buckets = e.cardinality > 0 ? e.cardinality : binning.bins;
    mass_[j].assign(buckets, 0.0);
    for (size_t i = 0; i < reference.rows(); ++i) {
      const double v = reference.at(i, j);
      const int b = e.cardinality > 0 ? static_cast<int>(std::lround(v))
                                      : binning.index(j, v);
      mass_[j].at(b) += 1.0;
    }
    for (double& m : mass_[j]) m /= static_cast<double>(reference.rows());
  }
}

double EmpiricalDensity::bin_mass(const DataTable&, size_t, int j, double lo,
                                  double) const {
  // lo is always an exact bin edge handed out by attribute_nll.
  const int b = binning_.index(j, std::nextafter(lo, lo + 1.0));
  return mass_[j][b];
}

double EmpiricalDensity::category_mass(const DataTable&, size_t, int j,
                                       int c) const {
  return mass_[j].at(c);
}

double GmmDensity::bin_mass(const DataTable&, size_t, int j, double lo,
                            double hi) const {
  return model_.bin_mass(j, lo, hi);
}

double GmmDensity::category_mass(const DataTable&, size_t, int j,
                                 int c) const {
  return model_.category_mass(j, c);
}

double BnDensity::bin_mass(const DataTable& data, size_t i, int j, double lo,
                           double hi) const {
  if (j == model_.child_index()) {
    const double prev =
        i == 0 ? std::numeric_limits<double>::quiet_NaN()
               : data.at(i - 1, j);
    return model_.child_bin_mass(prev, data.at(i, model_.parent_index()), lo,
                                 hi);
  }
  return model_.marginals().bin_mass(j, lo, hi);
}

double BnDensity::category_mass(const DataTable&, size_t, int j, int c) const {
  return model_.marginals().category_mass(j, c);
}

StanDensity::StanDensity(const StanModel& model, const DataTable& data,
                         int batch_size)
    : model_(model) {
  if (!(model.schema() == data.schema()))
    throw Error("StanDensity: table schema does not match the model");
  const AttributeSchema& schema = model.schema();
  const size_t n = data.rows();
  size_t clamped = 0;
  const std::vector<float> rows = encode_table(data, model.scalers(), &clamped);
  const WindowBuilder wb(rows.data(), n, schema.width(), model.k());

  mixtures_.resize(schema.num_expanded());
  observed_prob_.resize(schema.num_expanded());
  std::vector<size_t> idx;
  for (int j = 0; j < schema.num_expanded(); ++j) {
    const ExpandedAttribute& e = schema.expanded()[j];
    if (e.cardinality == 0) {
      mixtures_[j].reserve(n);
      for (size_t s = 0; s < n; s += batch_size) {
        const size_t end = std::min(n, s + batch_size);
        idx.clear();
        for (size_t i = s; i < end; ++i) idx.push_back(i);
        auto batch = model.head_mixture_batch(wb.batch(idx), j);
        for (auto& p : batch) mixtures_[j].push_back(std::move(p));
      }
    } else {
      observed_prob_[j].resize(n);
      nn::Tensor win({1, 1, model.k() + 1, schema.width()});
      for (size_t i = 0; i < n; ++i) {
        wb.fill(i, win.data());
        const std::vector<double> probs = model.head_categorical(win, j);
        observed_prob_[j][i] =
            probs.at(static_cast<size_t>(std::lround(data.at(i, j))));
      }
    }
  }
}

double StanDensity::bin_mass(const DataTable&, size_t i, int j, double lo,
                             double hi) const {
  const ScalerParams& sc = model_.scalers();
  const ScalerParams::Range& r = sc.ranges[j];
  if (r.hi <= r.lo)
    // Degenerate training range: the model generates the constant r.lo.
    return (lo < r.lo && r.lo <= hi) ? 1.0 : 0.0;
  const double slo = (lo - r.lo) / (r.hi - r.lo);
  const double shi = (hi - r.lo) / (r.hi - r.lo);
  return mixture_bin_mass(mixtures_[j][i], slo, shi);
}

double StanDensity::category_mass(const DataTable&, size_t i, int j,
                                  int) const {
  return observed_prob_[j][i];
}

// --------------------------------------------------------------------------
// Flow-level summaries
// --------------------------------------------------------------------------
UserActivity user_activity(const std::vector<FlowRecord>& flows) {
  std::map<uint32_t, std::set<uint32_t>> peers;
  std::map<uint32_t, double> volume;
  for (const FlowRecord& f : flows) {
    const uint32_t s = ipv4_key(f.sa), d = ipv4_key(f.da);
    peers[s].insert(d);
    peers[d].insert(s);
    volume[s] += static_cast<double>(f.byt);
    volume[d] += static_cast<double>(f.byt);
  }
  UserActivity out;
  for (const auto& [ip, p] : peers) {
    out.users.push_back(ip);
    out.unique_peers.push_back(static_cast<double>(p.size()));
    out.byte_volume.push_back(volume[ip]);
  }
  return out;
}

std::vector<PortShare> top_ports(const std::vector<FlowRecord>& flows,
                                 Protocol pr, double min_share, size_t limit) {
  std::map<int, size_t> counts;
  size_t total = 0;
  for (const FlowRecord& f : flows) {
    if (f.pr != pr) continue;
    ++counts[f.dp];
    ++total;
  }
  std::vector<PortShare> out;
  if (total == 0) return out;
  for (const auto& [port, count] : counts) {
    const double share = static_cast<double>(count) / static_cast<double>(total);
    if (share >= min_share) out.push_back({port, share});
  }
  std::sort(out.begin(), out.end(), [](const PortShare& a, const PortShare& b) {
    if (a.share != b.share) return a.share > b.share;
    return a.port < b.port;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

}  // namespace stan
