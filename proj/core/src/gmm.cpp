#include "stan/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stan/checkpoint.hpp"

namespace stan {

EmResult fit_mixture_em(std::span<const double> values, const EmConfig& cfg) {
  if (values.empty()) throw Error("fit_mixture_em: no data");
  if (cfg.components <= 0) throw ConfigError("EM components must be positive");
  const size_t n = values.size();

  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double pooled_sd = std::sqrt(var);
  // Variance floor: relative to the data scale, absolute fallback for
  // constant data.
  const double sigma_floor = std::max(1e-6 * pooled_sd, 1e-9);

  EmResult res;
  if (pooled_sd == 0.0) {
    // All values identical: a single point component.
    res.mixture.alpha = {1.0};
    res.mixture.mu = {values[0]};
    res.mixture.sigma = {sigma_floor};
    res.converged = true;
    res.iters = 0;
    res.mean_log_likelihood = mixture_log_pdf(res.mixture, values[0]);
    return res;
  }

  const int g = std::min<int>(cfg.components, static_cast<int>(n));
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  MixtureParams p;
  p.alpha.assign(g, 1.0 / g);
  p.mu.resize(g);
  p.sigma.assign(g, std::max(pooled_sd, sigma_floor));
  for (int i = 0; i < g; ++i) {
    const double q = (i + 0.5) / g;
    const size_t idx = std::min<size_t>(static_cast<size_t>(q * n), n - 1);
    p.mu[i] = sorted[idx];
  }

  std::vector<double> resp(static_cast<size_t>(g));
  std::vector<double> w(g), wx(g), wxx(g);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    std::fill(w.begin(), w.end(), 0.0);
    std::fill(wx.begin(), wx.end(), 0.0);
    std::fill(wxx.begin(), wxx.end(), 0.0);
    double ll = 0;
    for (size_t s = 0; s < n; ++s) {
      const double x = values[s];
      double mx = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < g; ++i) {
        const double z = (x - p.mu[i]) / p.sigma[i];
        resp[i] = std::log(p.alpha[i]) - std::log(p.sigma[i]) -
                  0.9189385332046727 - 0.5 * z * z;
        mx = std::max(mx, resp[i]);
      }
      double total = 0;
      for (int i = 0; i < g; ++i) {
        resp[i] = std::exp(resp[i] - mx);
        total += resp[i];
      }
      ll += mx + std::log(total);
      for (int i = 0; i < g; ++i) {
        const double r = resp[i] / total;
        w[i] += r;
        wx[i] += r * x;
        wxx[i] += r * x * x;
      }
    }
    ll /= static_cast<double>(n);
    for (int i = 0; i < g; ++i) {
      if (w[i] < 1e-10) {
        // Starved component: keep its parameters, give it negligible weight.
        p.alpha[i] = 1e-10;
        continue;
      }
      p.alpha[i] = w[i] / static_cast<double>(n);
      p.mu[i] = wx[i] / w[i];
      const double v = wxx[i] / w[i] - p.mu[i] * p.mu[i];
      p.sigma[i] = std::sqrt(std::max(v, sigma_floor * sigma_floor));
    }
    double alpha_total = std::accumulate(p.alpha.begin(), p.alpha.end(), 0.0);
    for (double& a : p.alpha) a /= alpha_total;

    res.iters = iter;
    res.mean_log_likelihood = ll;
    if (std::abs(ll - prev_ll) < cfg.tol) {
      res.converged = true;
      break;
    }
    prev_ll = ll;
  }
  res.mixture = std::move(p);
  return res;
}

CategoricalCounts CategoricalCounts::from_counts(std::vector<double> counts) {
  CategoricalCounts c;
  c.counts_ = std::move(counts);
  for (double v : c.counts_) {
    if (v < 0) throw Error("negative category count");
    c.total_ += v;
  }
  return c;
}

std::vector<double> CategoricalCounts::frequencies() const {
  if (total_ <= 0) throw Error("categorical histogram is empty");
  std::vector<double> f(counts_.size());
  for (size_t i = 0; i < counts_.size(); ++i) f[i] = counts_[i] / total_;
  return f;
}

double CategoricalCounts::smoothed(int c) const {
  return (counts_.at(c) + 1.0) /
         (total_ + static_cast<double>(counts_.size()));
}

std::vector<double> CategoricalCounts::smoothed_probs() const {
  std::vector<double> p(counts_.size());
  for (size_t i = 0; i < counts_.size(); ++i)
    p[i] = smoothed(static_cast<int>(i));
  return p;
}

int CategoricalCounts::sample(Rng& rng) const {
  const std::vector<double> p = smoothed_probs();
  return rng.categorical(p);
}

GmmModel GmmModel::fit(const DataTable& data, const EmConfig& em,
                       std::vector<std::string>* warnings) {
  if (data.rows() == 0) throw Error("GmmModel::fit: empty table");
  GmmModel m;
  m.schema_ = data.schema();
  m.em_components_ = em.components;
  const int cols = m.schema_.num_expanded();
  m.mix_.resize(cols);
  m.cat_.resize(cols);
  m.em_info_.resize(cols);
  std::vector<double> column(data.rows());
  for (int j = 0; j < cols; ++j) {
    const ExpandedAttribute& e = m.schema_.expanded()[j];
    if (e.cardinality == 0) {
      for (size_t i = 0; i < data.rows(); ++i) column[i] = data.at(i, j);
      m.em_info_[j] = fit_mixture_em(column, em);
      m.mix_[j] = m.em_info_[j].mixture;
      if (!m.em_info_[j].converged && warnings)
        warnings->push_back("EM did not converge for attribute '" + e.name +
                            "' after " + std::to_string(m.em_info_[j].iters) +
                            " iterations");
    } else {
      CategoricalCounts c(e.cardinality);
      for (size_t i = 0; i < data.rows(); ++i)
        c.add(static_cast<int>(std::lround(data.at(i, j))));
      m.cat_[j] = std::move(c);
    }
  }
  return m;
}

const MixtureParams& GmmModel::mixture(int j) const {
  if (mix_.at(j).alpha.empty())
    throw Error("attribute " + std::to_string(j) + " is not continuous");
  return mix_[j];
}

const CategoricalCounts& GmmModel::counts(int j) const {
  if (cat_.at(j).cardinality() == 0)
    throw Error("attribute " + std::to_string(j) + " is not categorical");
  return cat_[j];
}

double GmmModel::sample_value(int j, Rng& rng) const {
  const ExpandedAttribute& e = schema_.expanded()[j];
  if (e.cardinality == 0) return sample_mixture(mix_[j], rng);
  return cat_[j].sample(rng);
}

DataTable GmmModel::sample_table(size_t n, Rng& rng) const {
  DataTable t(schema_);
  t.reserve(n);
  std::vector<double> row(schema_.num_expanded());
  for (size_t i = 0; i < n; ++i) {
    for (int j = 0; j < schema_.num_expanded(); ++j)
      row[j] = sample_value(j, rng);
    t.append_row(row);
  }
  return t;
}

std::vector<FlowRecord> GmmModel::sample_flows(const GenerateOptions& opt,
                                               Rng& rng) const {
  if (!schema_.is_netflow())
    throw Error("sample_flows requires the netflow schema");
  if (opt.rows == 0 && opt.horizon <= 0)
    throw ConfigError("generation needs a row count or a time horizon");
  const size_t hard_cap =
      opt.rows > 0 ? opt.rows
                   : (opt.max_rows > 0 ? opt.max_rows : size_t{10000000});
  std::vector<FlowRecord> flows;
  std::vector<double> row(schema_.num_expanded());
  DataTable one(schema_);
  double prev_te = opt.start_te;
  while (flows.size() < hard_cap) {
    for (int j = 0; j < schema_.num_expanded(); ++j)
      row[j] = sample_value(j, rng);
    DataTable tmp(schema_);
    tmp.append_row(row);
    const FlowRecord f = decode_row(tmp, 0, prev_te, rng);
    if (opt.horizon > 0 && f.te > opt.start_te + opt.horizon) break;
    flows.push_back(f);
    prev_te = f.te;
  }
  return flows;
}

double GmmModel::bin_mass(int j, double lo, double hi) const {
  return mixture_bin_mass(mixture(j), lo, hi);
}

double GmmModel::category_mass(int j, int c) const {
  return counts(j).smoothed(c);
}

nlohmann::json GmmModel::to_json() const {
  nlohmann::json meta;
  meta["schema"] = schema_.to_json();
  meta["components"] = em_components_;
  nlohmann::json attrs = nlohmann::json::array();
  for (int j = 0; j < schema_.num_expanded(); ++j) {
    nlohmann::json e;
    e["name"] = schema_.expanded()[j].name;
    if (schema_.expanded()[j].cardinality == 0) {
      e["alpha"] = mix_[j].alpha;
      e["mu"] = mix_[j].mu;
      e["sigma"] = mix_[j].sigma;
      e["converged"] = em_info_[j].converged;
      e["iters"] = em_info_[j].iters;
    } else {
      e["counts"] = cat_[j].counts();
    }
    attrs.push_back(e);
  }
  meta["attributes"] = attrs;
  return meta;
}

void GmmModel::save(const std::string& path) const {
  Checkpoint ck;
  ck.set_magic(kGmmMagic);
  ck.meta = to_json();
  write_checkpoint(path, ck);
}

GmmModel GmmModel::from_json(const nlohmann::json& meta) {
  GmmModel m;
  try {
    m.schema_ = AttributeSchema::from_json(meta.at("schema"));
    m.em_components_ = meta.value("components", 0);
    const auto& attrs = meta.at("attributes");
    const int cols = m.schema_.num_expanded();
    if (static_cast<int>(attrs.size()) != cols)
      throw IoError("checkpoint attribute count does not match schema");
    m.mix_.resize(cols);
    m.cat_.resize(cols);
    m.em_info_.resize(cols);
    for (int j = 0; j < cols; ++j) {
      const auto& e = attrs[j];
      if (m.schema_.expanded()[j].cardinality == 0) {
        m.mix_[j].alpha = e.at("alpha").get<std::vector<double>>();
        m.mix_[j].mu = e.at("mu").get<std::vector<double>>();
        m.mix_[j].sigma = e.at("sigma").get<std::vector<double>>();
        m.mix_[j].validate();
        m.em_info_[j].mixture = m.mix_[j];
        m.em_info_[j].converged = e.value("converged", true);
        m.em_info_[j].iters = e.value("iters", 0);
      } else {
        auto counts = e.at("counts").get<std::vector<double>>();
        if (static_cast<int>(counts.size()) !=
            m.schema_.expanded()[j].cardinality)
          throw IoError("checkpoint category counts do not match schema");
        m.cat_[j] = CategoricalCounts::from_counts(std::move(counts));
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw IoError("checkpoint metadata is malformed: " + std::string(ex.what()));
  }
  return m;
}

GmmModel GmmModel::load(const std::string& path) {
  const Checkpoint ck = read_checkpoint(path, kGmmMagic);
  return from_json(ck.meta);
}

}  // namespace stan
