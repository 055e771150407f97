#include "stan/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "stan/error.hpp"
#include "stan/net.hpp"
#include "stan/schema.hpp"
#include "stan/tensor.hpp"

namespace stan {

void TaskDataset::append(std::span<const double> features, double target) {
  if (d == 0) d = static_cast<int>(features.size());
  if (static_cast<int>(features.size()) != d)
    throw Error("TaskDataset: feature width mismatch");
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(target);
  ++n;
}

TaskDataset build_protocol_task(const std::vector<FlowRecord>& flows) {
  TaskDataset ds;
  for (const FlowRecord& f : flows) {
    std::array<double, 11> feat{};
    feat[0] = f.td;
    feat[1] = static_cast<double>(f.pkt);
    feat[2] = static_cast<double>(f.byt);
    feat[3] = static_cast<double>(port_to_category(f.sp));
    feat[4] = static_cast<double>(port_to_category(f.dp));
    for (int b = 0; b < 6; ++b)  // URG..FIN, high bit first
      feat[5 + b] = (f.flg.bits >> (5 - b)) & 1;
    ds.append(feat, static_cast<double>(static_cast<int>(f.pr)));
  }
  return ds;
}

double ByteScale::scale(double v) const {
  if (hi <= lo) return 0.0;
  return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

ByteScale fit_byte_scale(const std::vector<FlowRecord>& flows) {
  if (flows.empty()) throw Error("fit_byte_scale: no flows");
  ByteScale s;
  s.lo = s.hi = static_cast<double>(flows[0].byt);
  for (const FlowRecord& f : flows) {
    s.lo = std::min(s.lo, static_cast<double>(f.byt));
    s.hi = std::max(s.hi, static_cast<double>(f.byt));
  }
  if (s.hi <= s.lo) s.hi = s.lo + 1.0;
  return s;
}

TaskDataset build_bytes_task(const std::vector<FlowRecord>& flows, int lag,
                             const ByteScale& scale) {
  if (lag <= 0) throw Error("build_bytes_task: lag must be positive");
  // Group flow indices by source IP, preserving te order (flows are assumed
  // sorted by te; grouping keeps the relative order).
  std::map<uint32_t, std::vector<size_t>> by_source;
  for (size_t i = 0; i < flows.size(); ++i)
    by_source[ipv4_key(flows[i].sa)].push_back(i);

  TaskDataset ds;
  std::vector<double> feat(static_cast<size_t>(lag));
  for (const auto& [key, idx] : by_source) {
    (void)key;
    if (idx.size() <= static_cast<size_t>(lag)) continue;
    for (size_t t = static_cast<size_t>(lag); t < idx.size(); ++t) {
      for (int j = 0; j < lag; ++j)
        feat[static_cast<size_t>(j)] =
            scale.scale(static_cast<double>(flows[idx[t - lag + j]].byt));
      ds.append(feat, scale.scale(static_cast<double>(flows[idx[t]].byt)));
    }
  }
  return ds;
}

double macro_f1(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size())
    throw Error("macro_f1: size mismatch");
  if (truth.empty()) throw Error("macro_f1: empty input");
  std::map<int, std::array<size_t, 3>> stats;  // class -> {tp, fp, fn}
  for (size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == truth[i]) {
      stats[truth[i]][0]++;
    } else {
      stats[predicted[i]][1]++;
      stats[truth[i]][2]++;
    }
  }
  double sum = 0;
  for (const auto& [cls, s] : stats) {
    (void)cls;
    const auto [tp, fp, fn] = s;
    const double prec = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
    const double rec = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
    sum += prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  return sum / static_cast<double>(stats.size());
}

double mean_squared_error(std::span<const double> predicted,
                          std::span<const double> truth) {
  if (predicted.size() != truth.size())
    throw Error("mean_squared_error: size mismatch");
  if (truth.empty()) throw Error("mean_squared_error: empty input");
  double sum = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    const double e = predicted[i] - truth[i];
    sum += e * e;
  }
  return sum / static_cast<double>(truth.size());
}

// --------------------------------------------------------------------------
// Random forest
// --------------------------------------------------------------------------
namespace {

int majority_label(const std::vector<size_t>& counts) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(counts.size()); ++c)
    if (counts[static_cast<size_t>(c)] > counts[static_cast<size_t>(best)])
      best = c;  // ties keep the smallest class
  return best;
}

double gini(const std::vector<size_t>& counts, size_t total) {
  if (total == 0) return 0.0;
  double sum_sq = 0;
  for (size_t c : counts) {
    const double p = double(c) / double(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

}  // namespace

int RandomForestClassifier::grow(std::vector<Node>& tree,
                                 std::vector<size_t>& idx, size_t begin,
                                 size_t end, int depth,
                                 const TaskDataset& data, Rng& rng) {
  const size_t n = end - begin;
  std::vector<size_t> counts(static_cast<size_t>(classes_), 0);
  for (size_t i = begin; i < end; ++i)
    counts[static_cast<size_t>(data.y[idx[i]])]++;

  const bool pure =
      std::count_if(counts.begin(), counts.end(),
                    [](size_t c) { return c > 0; }) <= 1;
  const size_t min_split = 2 * static_cast<size_t>(cfg_.min_samples_leaf);
  if (pure || depth >= cfg_.max_depth || n < min_split) {
    Node leaf;
    leaf.label = majority_label(counts);
    tree.push_back(leaf);
    return static_cast<int>(tree.size()) - 1;
  }

  // Feature subsample: floor(sqrt(d)) distinct candidates.
  const int mtry =
      std::max(1, static_cast<int>(std::sqrt(static_cast<double>(d_))));
  std::vector<int> features(static_cast<size_t>(d_));
  std::iota(features.begin(), features.end(), 0);
  for (int j = 0; j < mtry; ++j) {
    const size_t pick =
        static_cast<size_t>(j) + rng.integer(static_cast<uint64_t>(d_ - j));
    std::swap(features[static_cast<size_t>(j)], features[pick]);
  }

  const double parent_gini = gini(counts, n);
  int best_feature = -1;
  double best_threshold = 0;
  double best_score = parent_gini - 1e-12;  // require a real improvement

  std::vector<std::pair<double, int>> vals(n);
  std::vector<size_t> left_counts(static_cast<size_t>(classes_));
  for (int j = 0; j < mtry; ++j) {
    const int f = features[static_cast<size_t>(j)];
    for (size_t i = 0; i < n; ++i) {
      const size_t r = idx[begin + i];
      vals[i] = {data.row(r)[f], static_cast<int>(data.y[r])};
    }
    std::sort(vals.begin(), vals.end());
    std::fill(left_counts.begin(), left_counts.end(), 0);
    size_t n_left = 0;
    for (size_t i = 0; i + 1 < n; ++i) {
      left_counts[static_cast<size_t>(vals[i].second)]++;
      ++n_left;
      if (vals[i].first == vals[i + 1].first) continue;  // keep ties together
      if (n_left < static_cast<size_t>(cfg_.min_samples_leaf) ||
          n - n_left < static_cast<size_t>(cfg_.min_samples_leaf))
        continue;
      std::vector<size_t> right_counts(counts);
      for (size_t c = 0; c < right_counts.size(); ++c)
        right_counts[c] -= left_counts[c];
      const double score =
          (double(n_left) * gini(left_counts, n_left) +
           double(n - n_left) * gini(right_counts, n - n_left)) /
          double(n);
      if (score < best_score) {
        best_score = score;
        best_feature = f;
        best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
      }
    }
  }

  if (best_feature < 0) {
    Node leaf;
    leaf.label = majority_label(counts);
    tree.push_back(leaf);
    return static_cast<int>(tree.size()) - 1;
  }

  // Partition idx[begin, end) in place.
  const auto mid_it = std::stable_partition(
      idx.begin() + static_cast<ptrdiff_t>(begin),
      idx.begin() + static_cast<ptrdiff_t>(end), [&](size_t r) {
        return data.row(r)[best_feature] <= best_threshold;
      });
  const size_t mid = static_cast<size_t>(mid_it - idx.begin());
  if (mid == begin || mid == end) {  // numeric edge case: give up
    Node leaf;
    leaf.label = majority_label(counts);
    tree.push_back(leaf);
    return static_cast<int>(tree.size()) - 1;
  }

  const int self = static_cast<int>(tree.size());
  tree.emplace_back();
  tree[static_cast<size_t>(self)].feature = best_feature;
  tree[static_cast<size_t>(self)].threshold = best_threshold;
  const int left = grow(tree, idx, begin, mid, depth + 1, data, rng);
  const int right = grow(tree, idx, mid, end, depth + 1, data, rng);
  tree[static_cast<size_t>(self)].left = left;
  tree[static_cast<size_t>(self)].right = right;
  return self;
}

void RandomForestClassifier::fit(const TaskDataset& data,
                                 const ForestConfig& cfg) {
  if (data.n == 0) throw Error("RandomForestClassifier: empty training set");
  cfg_ = cfg;
  d_ = data.d;
  classes_ = 0;
  for (double v : data.y) classes_ = std::max(classes_, int(v) + 1);

  trees_.assign(static_cast<size_t>(cfg.trees), {});
  for (int t = 0; t < cfg.trees; ++t) {
    Rng rng(derive_seed(cfg.seed, static_cast<uint64_t>(t)));
    std::vector<size_t> idx(data.n);
    for (size_t i = 0; i < data.n; ++i) idx[i] = rng.integer(data.n);
    grow(trees_[static_cast<size_t>(t)], idx, 0, idx.size(), 0, data, rng);
  }
}

int RandomForestClassifier::predict_one(const double* x) const {
  if (trees_.empty()) throw Error("RandomForestClassifier: not fitted");
  std::vector<size_t> votes(static_cast<size_t>(classes_), 0);
  for (const auto& tree : trees_) {
    // Root is the first node pushed by a leaf-only tree, otherwise the first
    // internal node created; grow() always places the subtree root at the
    // index it returns, and the top-level call returns the vector's head
    // position at the time of the call, which is 0.
    size_t at = 0;
    while (tree[at].feature >= 0)
      at = static_cast<size_t>(x[tree[at].feature] <= tree[at].threshold
                                   ? tree[at].left
                                   : tree[at].right);
    votes[static_cast<size_t>(tree[at].label)]++;
  }
  return majority_label(votes);
}

std::vector<int> RandomForestClassifier::predict(
    const TaskDataset& data) const {
  std::vector<int> out(data.n);
  for (size_t i = 0; i < data.n; ++i) out[i] = predict_one(data.row(i));
  return out;
}

// --------------------------------------------------------------------------
// MLP regressor
// --------------------------------------------------------------------------
struct MlpRegressor::Impl {
  nn::Net net;
};

void MlpRegressor::fit(const TaskDataset& data, const MlpConfig& cfg) {
  if (data.n == 0) throw Error("MlpRegressor: empty training set");
  d_ = data.d;
  impl_ = std::make_shared<Impl>();

  nn::NetworkSpec spec;
  spec.dense(cfg.hidden).relu().dense(1);
  impl_->net.build(spec, nn::Shape(1, 1, 1, d_));
  Rng init_rng(derive_seed(cfg.seed, 1));
  impl_->net.init(init_rng);
  nn::Adam opt(nn::AdamConfig{.lr = static_cast<float>(cfg.lr)},
               impl_->net.params());

  Rng shuffle_rng(derive_seed(cfg.seed, 2));
  std::vector<size_t> order(data.n);
  std::iota(order.begin(), order.end(), size_t{0});

  const int bs = std::max(1, cfg.batch_size);
  nn::Tensor x, gy;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<size_t>(order));
    for (size_t start = 0; start < data.n; start += size_t(bs)) {
      const size_t b = std::min(size_t(bs), data.n - start);
      x.resize(nn::Shape(static_cast<int>(b), 1, 1, d_));
      for (size_t i = 0; i < b; ++i) {
        const double* r = data.row(order[start + i]);
        for (int j = 0; j < d_; ++j)
          x.at(static_cast<int>(i), 0, 0, j) = static_cast<float>(r[j]);
      }
      const nn::Tensor& pred = impl_->net.forward(x, /*train=*/true);
      gy.resize(pred.shape());
      for (size_t i = 0; i < b; ++i) {
        const double diff = double(pred.vec()[i]) - data.y[order[start + i]];
        gy.vec()[i] = static_cast<float>(2.0 * diff / double(b));
      }
      impl_->net.zero_grads();
      impl_->net.backward(gy);
      opt.step();
    }
  }
}

std::vector<double> MlpRegressor::predict(const TaskDataset& data) const {
  if (!impl_) throw Error("MlpRegressor: not fitted");
  if (data.d != d_) throw Error("MlpRegressor: feature width mismatch");
  std::vector<double> out(data.n);
  nn::Tensor x;
  constexpr size_t kChunk = 512;
  for (size_t start = 0; start < data.n; start += kChunk) {
    const size_t b = std::min(kChunk, data.n - start);
    x.resize(nn::Shape(static_cast<int>(b), 1, 1, d_));
    for (size_t i = 0; i < b; ++i) {
      const double* r = data.row(start + i);
      for (int j = 0; j < d_; ++j)
        x.at(static_cast<int>(i), 0, 0, j) = static_cast<float>(r[j]);
    }
    const nn::Tensor& pred = impl_->net.forward(x, /*train=*/false);
    for (size_t i = 0; i < b; ++i) out[start + i] = double(pred.vec()[i]);
  }
  return out;
}

double evaluate_protocol_task(const TaskDataset& train, const TaskDataset& test,
                              const ForestConfig& cfg) {
  RandomForestClassifier forest;
  forest.fit(train, cfg);
  const std::vector<int> pred = forest.predict(test);
  std::vector<int> truth(test.n);
  for (size_t i = 0; i < test.n; ++i) truth[i] = static_cast<int>(test.y[i]);
  return macro_f1(pred, truth);
}

double evaluate_bytes_task(const TaskDataset& train, const TaskDataset& test,
                           const MlpConfig& cfg) {
  MlpRegressor mlp;
  mlp.fit(train, cfg);
  return mean_squared_error(mlp.predict(test), test.y);
}

// --------------------------------------------------------------------------
// Substitution curve
// --------------------------------------------------------------------------
namespace {

TaskDataset subset(const TaskDataset& src, const std::vector<size_t>& rows,
                   size_t count) {
  TaskDataset out;
  out.d = src.d;
  for (size_t i = 0; i < count; ++i) {
    const size_t r = rows[i];
    out.append(std::span<const double>(src.row(r), size_t(src.d)), src.y[r]);
  }
  return out;
}

void append_rows(TaskDataset& dst, const TaskDataset& src,
                 const std::vector<size_t>& rows, size_t count) {
  for (size_t i = 0; i < count; ++i) {
    const size_t r = rows[i];
    dst.append(std::span<const double>(src.row(r), size_t(src.d)), src.y[r]);
  }
}

double eval_point(const TaskDataset& train, const TaskDataset& test,
                  const CurveConfig& cfg, uint64_t model_seed) {
  if (cfg.task == TaskKind::kProtocol) {
    ForestConfig fc = cfg.forest;
    fc.seed = model_seed;
    return evaluate_protocol_task(train, test, fc);
  }
  MlpConfig mc = cfg.mlp;
  mc.seed = model_seed;
  return evaluate_bytes_task(train, test, mc);
}

}  // namespace

nlohmann::json CurvePoint::to_json() const {
  return {{"fraction", fraction},
          {"mean", mean},
          {"stddev", stddev},
          {"per_set", per_set}};
}

std::vector<CurvePoint> substitution_curve(
    const std::vector<FlowRecord>& real,
    const std::vector<std::vector<FlowRecord>>& synth_sets,
    const CurveConfig& cfg) {
  if (cfg.folds < 2) throw ConfigError("substitution_curve: need at least 2 folds");
  if (synth_sets.empty())
    throw ConfigError("substitution_curve: need at least one synthetic set");
  for (double f : cfg.fractions)
    if (!(f >= 0.0 && f <= 1.0))
      throw ConfigError("substitution_curve: fractions must lie in [0, 1]");

  // Feature extraction.  The byte-scale is fitted on real data and shared so
  // real and synthetic features live on the same scale.
  TaskDataset real_ds;
  std::vector<TaskDataset> synth_ds(synth_sets.size());
  if (cfg.task == TaskKind::kProtocol) {
    real_ds = build_protocol_task(real);
    for (size_t s = 0; s < synth_sets.size(); ++s)
      synth_ds[s] = build_protocol_task(synth_sets[s]);
  } else {
    const ByteScale scale = fit_byte_scale(real);
    real_ds = build_bytes_task(real, cfg.lag, scale);
    for (size_t s = 0; s < synth_sets.size(); ++s)
      synth_ds[s] = build_bytes_task(synth_sets[s], cfg.lag, scale);
  }
  const size_t n = real_ds.n;
  if (n < static_cast<size_t>(cfg.folds))
    throw ConfigError("substitution_curve: fewer real examples than folds");

  // One shared permutation defines the folds: fold i is the i-th contiguous
  // chunk of the shuffled real examples.
  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), size_t{0});
  Rng fold_rng(derive_seed(cfg.seed, 100));
  fold_rng.shuffle(std::span<size_t>(perm));
  std::vector<size_t> fold_start(static_cast<size_t>(cfg.folds) + 1);
  for (int i = 0; i <= cfg.folds; ++i)
    fold_start[static_cast<size_t>(i)] =
        n * static_cast<size_t>(i) / static_cast<size_t>(cfg.folds);

  // Per-fold training pools, shuffled once with fold-specific seeds so the
  // real portion of every mixture is independent of fraction and synth set.
  std::vector<std::vector<size_t>> pools(static_cast<size_t>(cfg.folds));
  std::vector<TaskDataset> fold_tests(static_cast<size_t>(cfg.folds));
  for (int i = 0; i < cfg.folds; ++i) {
    auto& pool = pools[static_cast<size_t>(i)];
    for (size_t p = 0; p < n; ++p) {
      const bool in_test = p >= fold_start[static_cast<size_t>(i)] &&
                           p < fold_start[static_cast<size_t>(i) + 1];
      if (!in_test) pool.push_back(perm[p]);
    }
    Rng pool_rng(derive_seed(cfg.seed, 500 + static_cast<uint64_t>(i)));
    pool_rng.shuffle(std::span<size_t>(pool));
    std::vector<size_t> test_rows(
        perm.begin() + static_cast<ptrdiff_t>(fold_start[size_t(i)]),
        perm.begin() + static_cast<ptrdiff_t>(fold_start[size_t(i) + 1]));
    fold_tests[static_cast<size_t>(i)] =
        subset(real_ds, test_rows, test_rows.size());
  }

  // Per-set shuffled synthetic orders (independent of fold and fraction).
  std::vector<std::vector<size_t>> synth_order(synth_sets.size());
  for (size_t s = 0; s < synth_sets.size(); ++s) {
    synth_order[s].resize(synth_ds[s].n);
    std::iota(synth_order[s].begin(), synth_order[s].end(), size_t{0});
    Rng synth_rng(derive_seed(cfg.seed, 700 + s));
    synth_rng.shuffle(std::span<size_t>(synth_order[s]));
  }

  std::vector<CurvePoint> curve;
  for (double f : cfg.fractions) {
    CurvePoint point;
    point.fraction = f;
    const uint64_t f_tag = static_cast<uint64_t>(std::llround(f * 1e6));
    for (size_t s = 0; s < synth_sets.size(); ++s) {
      double fold_sum = 0;
      for (int i = 0; i < cfg.folds; ++i) {
        const auto& pool = pools[static_cast<size_t>(i)];
        const size_t pool_n = pool.size();
        const size_t n_real = static_cast<size_t>(
            std::llround(f * static_cast<double>(pool_n)));
        const size_t n_synth = pool_n - n_real;
        // The requested fractions are impossible with the supplied data, so
        // this is a usage error, not a runtime failure.
        if (n_synth > synth_ds[s].n)
          throw ConfigError("substitution_curve: synthetic set " +
                      std::to_string(s) + " has " +
                      std::to_string(synth_ds[s].n) +
                      " examples but the mixture needs " +
                      std::to_string(n_synth));
        TaskDataset train = subset(real_ds, pool, n_real);
        train.d = real_ds.d;  // in case n_real == 0
        append_rows(train, synth_ds[s], synth_order[s], n_synth);
        const uint64_t model_seed = derive_seed(
            derive_seed(cfg.seed, 300 + static_cast<uint64_t>(i)), f_tag);
        fold_sum +=
            eval_point(train, fold_tests[static_cast<size_t>(i)], cfg,
                       model_seed);
      }
      point.per_set.push_back(fold_sum / cfg.folds);
    }
    const size_t m = point.per_set.size();
    point.mean =
        std::accumulate(point.per_set.begin(), point.per_set.end(), 0.0) /
        static_cast<double>(m);
    if (m > 1) {
      double ss = 0;
      for (double v : point.per_set) ss += (v - point.mean) * (v - point.mean);
      point.stddev = std::sqrt(ss / static_cast<double>(m - 1));
    }
    curve.push_back(std::move(point));
  }
  return curve;
}

}  // namespace stan
