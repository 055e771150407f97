#include "stan/bayes_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stan/checkpoint.hpp"

namespace stan {

FreqBins FreqBins::fit(std::span<const double> values, int bins) {
  if (values.empty()) throw Error("FreqBins::fit: no data");
  if (bins <= 0) throw ConfigError("bin count must be positive");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  FreqBins fb;
  fb.edges.resize(bins + 1);
  fb.edges.front() = sorted.front();
  fb.edges.back() = sorted.back();
  const size_t n = sorted.size();
  for (int i = 1; i < bins; ++i)
    fb.edges[i] = sorted[std::min(n - 1, i * n / static_cast<size_t>(bins))];
  // Edges must be non-decreasing (ties can duplicate quantiles).
  for (int i = 1; i <= bins; ++i)
    fb.edges[i] = std::max(fb.edges[i], fb.edges[i - 1]);
  return fb;
}

int FreqBins::index(double v) const {
  // First interior edge >= v determines the bin; bin b is (e[b], e[b+1]].
  const auto begin = edges.begin() + 1, end = edges.end() - 1;
  return static_cast<int>(std::lower_bound(begin, end, v) - begin);
}

nlohmann::json BnConfig::to_json() const {
  return {{"child", child},
          {"parent", parent},
          {"parent_bins", parent_bins},
          {"value_bins", value_bins},
          {"dependence", dependence},
          {"components", em.components}};
}

BnConfig BnConfig::from_json(const nlohmann::json& j) {
  BnConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "child") c.child = value.get<std::string>();
    else if (key == "parent") c.parent = value.get<std::string>();
    else if (key == "parent_bins") c.parent_bins = value.get<int>();
    else if (key == "value_bins") c.value_bins = value.get<int>();
    else if (key == "dependence") c.dependence = value.get<bool>();
    else if (key == "components") c.em.components = value.get<int>();
    else throw ConfigError("unknown dependence-model config key '" + key + "'");
  }
  if (c.parent_bins <= 0 || c.value_bins <= 0)
    throw ConfigError("bin counts must be positive");
  return c;
}

BnModel BnModel::fit(const DataTable& data, const BnConfig& cfg,
                     std::vector<std::string>* warnings) {
  BnModel m;
  m.cfg_ = cfg;
  m.gmm_ = GmmModel::fit(data, cfg.em, warnings);
  m.j_child_ = data.schema().expanded_index(cfg.child);
  m.j_parent_ = data.schema().expanded_index(cfg.parent);
  if (m.j_child_ < 0)
    throw ConfigError("dependence model: unknown child attribute '" +
                      cfg.child + "'");
  if (m.j_parent_ < 0)
    throw ConfigError("dependence model: unknown parent attribute '" +
                      cfg.parent + "'");
  if (m.j_child_ == m.j_parent_)
    throw ConfigError("dependence model: child and parent must differ");
  if (data.schema().expanded()[m.j_child_].cardinality != 0 ||
      data.schema().expanded()[m.j_parent_].cardinality != 0)
    throw ConfigError("dependence model: child and parent must be continuous");

  const size_t n = data.rows();
  std::vector<double> child(n), parent(n);
  for (size_t i = 0; i < n; ++i) {
    child[i] = data.at(i, m.j_child_);
    parent[i] = data.at(i, m.j_parent_);
  }
  m.value_bins_ = FreqBins::fit(child, cfg.value_bins);
  m.prev_bins_ = FreqBins::fit(child, cfg.parent_bins);
  m.parent_bins_ = FreqBins::fit(parent, cfg.parent_bins);

  m.cells_.assign(static_cast<size_t>(cfg.parent_bins) * cfg.parent_bins,
                  std::vector<double>(cfg.value_bins, 0.0));
  m.marginal_.assign(cfg.value_bins, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const int vb = m.value_bins_.index(child[i]);
    m.marginal_[vb] += 1.0;
    if (i == 0) continue;
    const int pb = m.prev_bins_.index(child[i - 1]);
    const int qb = m.parent_bins_.index(parent[i]);
    m.cells_[static_cast<size_t>(pb) * cfg.parent_bins + qb][vb] += 1.0;
  }
  return m;
}

const std::vector<double>& BnModel::cell(double prev_value,
                                         double parent_value) const {
  if (std::isnan(prev_value)) return marginal_;
  const int pb = prev_bins_.index(prev_value);
  const int qb = parent_bins_.index(parent_value);
  const auto& c = cells_[static_cast<size_t>(pb) * cfg_.parent_bins + qb];
  double total = 0;
  for (double v : c) total += v;
  // Unseen conditioning cell: fall back to the marginal histogram.
  return total > 0 ? c : marginal_;
}

double BnModel::sample_child(double prev_value, double parent_value,
                             Rng& rng) const {
  const std::vector<double>& counts = cell(prev_value, parent_value);
  // Add-one smoothing over value bins.
  std::vector<double> w(counts.size());
  for (size_t b = 0; b < counts.size(); ++b) w[b] = counts[b] + 1.0;
  const int b = rng.categorical(w);
  const double lo = value_bins_.lo(b), hi = value_bins_.hi(b);
  return hi > lo ? rng.uniform(lo, hi) : lo;
}

double BnModel::hist_bin_mass(const std::vector<double>& counts, double lo,
                              double hi) const {
  double total = 0;
  for (double c : counts) total += c + 1.0;
  double mass = 0;
  for (int b = 0; b < value_bins_.count(); ++b) {
    const double p = (counts[b] + 1.0) / total;
    const double blo = value_bins_.lo(b), bhi = value_bins_.hi(b);
    if (bhi > blo) {
      const double overlap = std::min(hi, bhi) - std::max(lo, blo);
      if (overlap > 0) mass += p * overlap / (bhi - blo);
    } else if (blo > lo && blo <= hi) {
      mass += p;  // degenerate (point) bin
    }
  }
  return mass;
}

double BnModel::child_bin_mass(double prev_value, double parent_value,
                               double lo, double hi) const {
  if (lo > hi) throw Error("child_bin_mass: lo > hi");
  if (!cfg_.dependence) return gmm_.bin_mass(j_child_, lo, hi);
  return hist_bin_mass(cell(prev_value, parent_value), lo, hi);
}

DataTable BnModel::sample_table(size_t n, Rng& rng) const {
  const AttributeSchema& schema = gmm_.schema();
  DataTable t(schema);
  t.reserve(n);
  std::vector<double> row(schema.num_expanded());
  double prev_child = std::numeric_limits<double>::quiet_NaN();
  for (size_t i = 0; i < n; ++i) {
    for (int j = 0; j < schema.num_expanded(); ++j)
      if (j != j_child_) row[j] = gmm_.sample_value(j, rng);
    row[j_child_] = cfg_.dependence
                        ? sample_child(prev_child, row[j_parent_], rng)
                        : gmm_.sample_value(j_child_, rng);
    prev_child = row[j_child_];
    t.append_row(row);
  }
  return t;
}

std::vector<FlowRecord> BnModel::sample_flows(const GenerateOptions& opt,
                                              Rng& rng) const {
  if (!gmm_.schema().is_netflow())
    throw Error("sample_flows requires the netflow schema");
  if (opt.rows == 0 && opt.horizon <= 0)
    throw ConfigError("generation needs a row count or a time horizon");
  const size_t hard_cap =
      opt.rows > 0 ? opt.rows
                   : (opt.max_rows > 0 ? opt.max_rows : size_t{10000000});
  const AttributeSchema& schema = gmm_.schema();
  std::vector<FlowRecord> flows;
  std::vector<double> row(schema.num_expanded());
  double prev_te = opt.start_te;
  double prev_child = std::numeric_limits<double>::quiet_NaN();
  while (flows.size() < hard_cap) {
    for (int j = 0; j < schema.num_expanded(); ++j)
      if (j != j_child_) row[j] = gmm_.sample_value(j, rng);
    row[j_child_] = cfg_.dependence
                        ? sample_child(prev_child, row[j_parent_], rng)
                        : gmm_.sample_value(j_child_, rng);
    DataTable tmp(schema);
    tmp.append_row(row);
    const FlowRecord f = decode_row(tmp, 0, prev_te, rng);
    if (opt.horizon > 0 && f.te > opt.start_te + opt.horizon) break;
    prev_child = row[j_child_];
    flows.push_back(f);
    prev_te = f.te;
  }
  return flows;
}

void BnModel::save(const std::string& path) const {
  Checkpoint ck;
  ck.set_magic(kBnMagic);
  ck.meta["config"] = cfg_.to_json();
  ck.meta["marginals"] = gmm_.to_json();
  ck.meta["prev_edges"] = prev_bins_.edges;
  ck.meta["parent_edges"] = parent_bins_.edges;
  ck.meta["value_edges"] = value_bins_.edges;
  ck.meta["cells"] = cells_;
  ck.meta["marginal"] = marginal_;
  write_checkpoint(path, ck);
}

BnModel BnModel::load(const std::string& path) {
  const Checkpoint ck = read_checkpoint(path, kBnMagic);
  BnModel m;
  try {
    m.cfg_ = BnConfig::from_json(ck.meta.at("config"));
    m.gmm_ = GmmModel::from_json(ck.meta.at("marginals"));
    m.prev_bins_.edges = ck.meta.at("prev_edges").get<std::vector<double>>();
    m.parent_bins_.edges =
        ck.meta.at("parent_edges").get<std::vector<double>>();
    m.value_bins_.edges = ck.meta.at("value_edges").get<std::vector<double>>();
    m.cells_ = ck.meta.at("cells").get<std::vector<std::vector<double>>>();
    m.marginal_ = ck.meta.at("marginal").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& ex) {
    throw IoError("checkpoint metadata is malformed: " + std::string(ex.what()));
  }
  m.j_child_ = m.gmm_.schema().expanded_index(m.cfg_.child);
  m.j_parent_ = m.gmm_.schema().expanded_index(m.cfg_.parent);
  if (m.j_child_ < 0 || m.j_parent_ < 0)
    throw IoError("checkpoint schema lacks the dependence attributes");
  if (m.cells_.size() !=
          static_cast<size_t>(m.cfg_.parent_bins) * m.cfg_.parent_bins ||
      m.marginal_.size() != static_cast<size_t>(m.cfg_.value_bins))
    throw IoError("checkpoint histogram sizes do not match its config");
  return m;
}

}  // namespace stan
