#include "stan/model.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <mutex>
#include <thread>

#include "stan/checkpoint.hpp"

namespace stan {

std::string mask_name(MaskKind m) { return m == MaskKind::kA ? "A" : "B"; }

MaskKind mask_from_name(const std::string& s) {
  if (s == "A" || s == "a") return MaskKind::kA;
  if (s == "B" || s == "b") return MaskKind::kB;
  throw ConfigError("unknown mask '" + s + "' (expected A or B)");
}

void apply_mask(nn::Tensor& windows, MaskKind mask,
                const AttributeSchema& schema, int head) {
  const nn::Shape s = windows.shape();
  if (s.w != schema.width() || s.h < 1)
    throw ShapeError("apply_mask: window shape " + s.str() +
                     " does not match schema width " +
                     std::to_string(schema.width()));
  const int cur = s.h - 1;
  const int rank = schema.expanded()[head].order;
  for (int b = 0; b < s.n; ++b) {
    float* row = &windows.at(b, 0, cur, 0);
    if (mask == MaskKind::kA) {
      std::fill(row, row + s.w, 0.0f);
    } else {
      for (const ExpandedAttribute& e : schema.expanded())
        if (e.order >= rank) std::fill(row + e.col, row + e.col + e.width, 0.0f);
    }
  }
}

nn::NetworkSpec TrunkConfig::spec() const {
  nn::NetworkSpec s;
  if (naive) return s;
  for (const auto& block : blocks) {
    for (int f : block) s.conv3x3(f);
    s.batchnorm().relu().maxpool2();
  }
  return s;
}

nlohmann::json TrunkConfig::to_json() const {
  return {{"naive", naive}, {"blocks", blocks}};
}

TrunkConfig TrunkConfig::from_json(const nlohmann::json& j) {
  TrunkConfig t;
  for (const auto& [key, value] : j.items()) {
    if (key == "naive") t.naive = value.get<bool>();
    else if (key == "blocks") t.blocks = value.get<std::vector<std::vector<int>>>();
    else throw ConfigError("unknown trunk config key '" + key + "'");
  }
  return t;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"mask", mask_name(mask)},
          {"k", k},
          {"components", components},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"patience", patience},
          {"lr_mdn", lr_mdn},
          {"lr_softmax", lr_softmax},
          {"val_fraction", val_fraction},
          {"seed", seed},
          {"threads", threads},
          {"trunk", trunk.to_json()}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "mask") c.mask = mask_from_name(value.get<std::string>());
    else if (key == "k") c.k = value.get<int>();
    else if (key == "components") c.components = value.get<int>();
    else if (key == "epochs") c.epochs = value.get<int>();
    else if (key == "batch_size") c.batch_size = value.get<int>();
    else if (key == "patience") c.patience = value.get<int>();
    else if (key == "lr_mdn") c.lr_mdn = value.get<double>();
    else if (key == "lr_softmax") c.lr_softmax = value.get<double>();
    else if (key == "val_fraction") c.val_fraction = value.get<double>();
    else if (key == "seed") c.seed = value.get<uint64_t>();
    else if (key == "threads") c.threads = value.get<int>();
    else if (key == "trunk") c.trunk = TrunkConfig::from_json(value);
    else throw ConfigError("unknown train config key '" + key + "'");
  }
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  if (k <= 0) throw ConfigError("k must be positive");
  if (components <= 0) throw ConfigError("components must be positive");
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (patience < 0) throw ConfigError("patience must be >= 0");
  if (!(lr_mdn > 0) || !(lr_softmax > 0))
    throw ConfigError("learning rates must be positive");
  if (val_fraction < 0 || val_fraction >= 1)
    throw ConfigError("val_fraction must lie in [0, 1)");
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

nlohmann::json TrainLog::to_json() const {
  nlohmann::json hs = nlohmann::json::array();
  for (const auto& h : heads) {
    nlohmann::json e;
    e["name"] = h.name;
    e["kind"] = h.mdn ? "mixture" : "softmax";
    e["best_epoch"] = h.best_epoch;
    e["best_val"] = h.best_val;
    e["steps"] = h.steps;
    nlohmann::json eps = nlohmann::json::array();
    for (const auto& s : h.epochs)
      eps.push_back({{"train_loss", s.train_loss}, {"val_loss", s.val_loss}});
    e["epochs"] = eps;
    hs.push_back(e);
  }
  // Wall-clock time is kept in memory only: serialized logs must be
  // byte-identical across re-runs with the same seed.
  return {{"heads", hs}, {"rows", rows}, {"clamped_values", clamped_values}};
}

// ---------------------------------------------------------------------------
// Head plumbing
// ---------------------------------------------------------------------------
std::vector<nn::ParamRef> StanModel::Head::params() {
  std::vector<nn::ParamRef> out;
  for (nn::ParamRef p : trunk.params()) {
    p.name = "trunk." + p.name;
    out.push_back(p);
  }
  auto add = [&](const char* prefix, nn::DenseLayer* d) {
    if (!d) return;
    for (nn::ParamRef p : d->params()) {
      p.name = std::string(prefix) + "." + p.name;
      out.push_back(p);
    }
  };
  add("alpha", alpha.get());
  add("mu", mu.get());
  add("sigma", sraw.get());
  add("logits", logits.get());
  return out;
}

std::vector<nn::ParamRef> StanModel::Head::all_tensors() {
  std::vector<nn::ParamRef> out = params();
  for (nn::ParamRef p : trunk.state()) {
    p.name = "trunk." + p.name;
    out.push_back(p);
  }
  return out;
}

const nn::Tensor& StanModel::Head::features(const nn::Tensor& x, bool train) {
  return trunk.empty() ? x : trunk.forward(x, train);
}

void StanModel::build_heads() {
  heads_.clear();
  const nn::Shape input{1, 1, cfg_.k + 1, schema_.width()};
  for (int j = 0; j < schema_.num_expanded(); ++j) {
    const ExpandedAttribute& e = schema_.expanded()[j];
    Head h;
    h.j = j;
    h.name = e.name;
    h.mdn = e.cardinality == 0;
    h.trunk.build(cfg_.trunk.spec(), input);
    const nn::Shape feat =
        h.trunk.empty() ? input : h.trunk.output_shape();
    if (h.mdn) {
      h.alpha = std::make_unique<nn::DenseLayer>(cfg_.components);
      h.mu = std::make_unique<nn::DenseLayer>(cfg_.components);
      h.sraw = std::make_unique<nn::DenseLayer>(cfg_.components);
      h.alpha->infer(feat);
      h.mu->infer(feat);
      h.sraw->infer(feat);
    } else {
      h.logits = std::make_unique<nn::DenseLayer>(e.cardinality);
      h.logits->infer(feat);
    }
    heads_.push_back(std::move(h));
  }
}

namespace {

std::vector<std::vector<float>> snapshot_params(
    std::vector<nn::ParamRef> refs) {
  std::vector<std::vector<float>> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.push_back(r.value->vec());
  return out;
}

void restore_params(std::vector<nn::ParamRef> refs,
                    const std::vector<std::vector<float>>& snd) {
  for (size_t i = 0; i < refs.size(); ++i) refs[i].value->vec() = snd[i];
}

void add_into(nn::Tensor& acc, const nn::Tensor& x) {
  for (size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------
StanModel StanModel::train(const DataTable& data, const TrainConfig& cfg,
                           TrainLog* log) {
  cfg.validate();
  if (data.rows() < 2) throw Error("training needs at least 2 rows");
  const auto t0 = std::chrono::steady_clock::now();

  StanModel m;
  m.schema_ = data.schema();
  m.cfg_ = cfg;
  m.scalers_ = ScalerParams::fit(data);
  m.build_heads();
  // Deterministic per-head init, independent of thread schedule.
  for (auto& h : m.heads_) {
    Rng rng(derive_seed(cfg.seed, 1000 + h.j));
    h.trunk.init(rng);
    if (h.alpha) h.alpha->init(rng);
    if (h.mu) h.mu->init(rng);
    if (h.sraw) h.sraw->init(rng);
    if (h.logits) h.logits->init(rng);
  }

  size_t clamped = 0;
  const std::vector<float> rows = encode_table(data, m.scalers_, &clamped);

  TrainLog local;
  TrainLog& tl = log ? *log : local;
  tl = TrainLog{};
  tl.rows = data.rows();
  tl.clamped_values = clamped;
  tl.heads.resize(m.heads_.size());

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned nthreads = std::min<unsigned>(
      cfg.threads == 0 ? hw : static_cast<unsigned>(cfg.threads),
      static_cast<unsigned>(m.heads_.size()));
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= m.heads_.size()) return;
      try {
        m.train_head(m.heads_[i], data, rows, &tl.heads[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  tl.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return m;
}

void StanModel::train_head(Head& head, const DataTable& data,
                           const std::vector<float>& rows, HeadLog* log) {
  const int j = head.j;
  const size_t n = data.rows();
  const int width = schema_.width();
  const int G = cfg_.components;
  const WindowBuilder wb(rows.data(), n, width, cfg_.k);

  log->name = head.name;
  log->mdn = head.mdn;

  // Targets: scaled value for mixture heads, category index for softmax heads.
  std::vector<float> target(n, 0.0f);
  std::vector<int> target_cat(n, 0);
  for (size_t i = 0; i < n; ++i) {
    if (head.mdn)
      target[i] = static_cast<float>(scalers_.scale(j, data.at(i, j)));
    else
      target_cat[i] = static_cast<int>(std::lround(data.at(i, j)));
  }

  size_t n_val = static_cast<size_t>(std::floor(static_cast<double>(n) *
                                                cfg_.val_fraction));
  if (n - n_val < 1) n_val = n - 1;
  const size_t n_train = n - n_val;

  std::vector<size_t> train_idx(n_train);
  for (size_t i = 0; i < n_train; ++i) train_idx[i] = i;

  nn::AdamConfig ac;
  ac.lr = static_cast<float>(head.mdn ? cfg_.lr_mdn : cfg_.lr_softmax);
  nn::Adam adam(ac, head.params());

  Rng rng(derive_seed(cfg_.seed, 2000 + j));

  const auto eval_loss = [&](size_t begin, size_t end) {
    double total = 0;
    std::vector<size_t> idx;
    std::vector<float> alpha(G), sigma(G);
    for (size_t s = begin; s < end; s += cfg_.batch_size) {
      const size_t e = std::min(end, s + cfg_.batch_size);
      idx.clear();
      for (size_t i = s; i < e; ++i) idx.push_back(i);
      nn::Tensor xb = wb.batch(idx);
      apply_mask(xb, cfg_.mask, schema_, j);
      const nn::Tensor& feat = head.features(xb, false);
      if (head.mdn) {
        nn::Tensor ao, mo, so;
        head.alpha->forward(feat, ao, false);
        head.mu->forward(feat, mo, false);
        head.sraw->forward(feat, so, false);
        for (size_t b = 0; b < idx.size(); ++b) {
          std::span<const float> a(ao.data() + b * G, static_cast<size_t>(G));
          std::span<const float> mu(mo.data() + b * G, static_cast<size_t>(G));
          std::span<const float> sr(so.data() + b * G, static_cast<size_t>(G));
          nn::mdn_transform<float>(a, sr, alpha, sigma,
                                   static_cast<float>(nn::kSigmaMin),
                                   static_cast<float>(nn::kSigmaMax));
          total += nn::mdn_nll<float>(alpha, mu, sigma, target[idx[b]]);
        }
      } else {
        nn::Tensor lo;
        head.logits->forward(feat, lo, false);
        const int C = lo.shape().per_item();
        for (size_t b = 0; b < idx.size(); ++b) {
          std::span<const float> row(lo.data() + b * C, static_cast<size_t>(C));
          total += nn::softmax_ce<float>(row, target_cat[idx[b]]);
        }
      }
    }
    return total / static_cast<double>(end - begin);
  };

  std::vector<std::vector<float>> best;
  double best_val = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    rng.shuffle(std::span<size_t>(train_idx));
    double loss_sum = 0;
    for (size_t s = 0; s < n_train; s += cfg_.batch_size) {
      const size_t e = std::min(n_train, s + cfg_.batch_size);
      std::span<const size_t> idx(train_idx.data() + s, e - s);
      const int B = static_cast<int>(idx.size());
      nn::Tensor xb = wb.batch(idx);
      apply_mask(xb, cfg_.mask, schema_, j);
      const nn::Tensor& feat = head.features(xb, true);
      double batch_loss = 0;
      nn::Tensor gfeat;
      if (head.mdn) {
        nn::Tensor ao, mo, so;
        head.alpha->forward(feat, ao, true);
        head.mu->forward(feat, mo, true);
        head.sraw->forward(feat, so, true);
        nn::Tensor ga(ao.shape()), gm(mo.shape()), gs(so.shape());
        for (int b = 0; b < B; ++b) {
          std::span<const float> a(ao.data() + b * static_cast<size_t>(G),
                                   static_cast<size_t>(G));
          std::span<const float> mu(mo.data() + b * static_cast<size_t>(G),
                                    static_cast<size_t>(G));
          std::span<const float> sr(so.data() + b * static_cast<size_t>(G),
                                    static_cast<size_t>(G));
          std::span<float> gar(ga.data() + b * static_cast<size_t>(G),
                               static_cast<size_t>(G));
          std::span<float> gmr(gm.data() + b * static_cast<size_t>(G),
                               static_cast<size_t>(G));
          std::span<float> gsr(gs.data() + b * static_cast<size_t>(G),
                               static_cast<size_t>(G));
          batch_loss += nn::mdn_nll_grad<float>(
              a, mu, sr, target[idx[b]], gar, gmr, gsr,
              static_cast<float>(nn::kSigmaMin),
              static_cast<float>(nn::kSigmaMax));
        }
        const float inv = 1.0f / static_cast<float>(B);
        for (size_t i = 0; i < ga.size(); ++i) {
          ga[i] *= inv;
          gm[i] *= inv;
          gs[i] *= inv;
        }
        nn::Tensor gxa, gxm, gxs;
        head.alpha->backward(feat, ao, ga, gxa);
        head.mu->backward(feat, mo, gm, gxm);
        head.sraw->backward(feat, so, gs, gxs);
        if (!head.trunk.empty()) {
          gfeat = gxa;
          add_into(gfeat, gxm);
          add_into(gfeat, gxs);
        }
      } else {
        nn::Tensor lo;
        head.logits->forward(feat, lo, true);
        const int C = lo.shape().per_item();
        nn::Tensor gl(lo.shape());
        for (int b = 0; b < B; ++b) {
          std::span<const float> row(lo.data() + b * static_cast<size_t>(C),
                                     static_cast<size_t>(C));
          std::span<float> grow(gl.data() + b * static_cast<size_t>(C),
                                static_cast<size_t>(C));
          batch_loss += nn::softmax_ce_grad<float>(row, target_cat[idx[b]], grow);
        }
        const float inv = 1.0f / static_cast<float>(B);
        for (size_t i = 0; i < gl.size(); ++i) gl[i] *= inv;
        nn::Tensor gx;
        head.logits->backward(feat, lo, gl, gx);
        if (!head.trunk.empty()) gfeat = gx;
      }
      if (!head.trunk.empty()) head.trunk.backward(gfeat);
      adam.step();
      ++log->steps;
      loss_sum += batch_loss;
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(n_train);
    stats.val_loss = n_val > 0 ? eval_loss(n_train, n)
                               : std::numeric_limits<double>::quiet_NaN();
    log->epochs.push_back(stats);

    if (n_val > 0) {
      if (stats.val_loss < best_val) {
        best_val = stats.val_loss;
        best = snapshot_params(head.all_tensors());
        log->best_epoch = epoch;
        bad_epochs = 0;
      } else if (++bad_epochs >= cfg_.patience && cfg_.patience > 0) {
        break;
      }
    }
  }

  if (!best.empty()) {
    restore_params(head.all_tensors(), best);
    log->best_val = best_val;
  } else {
    log->best_epoch = static_cast<int>(log->epochs.size()) - 1;
    log->best_val = log->epochs.empty() ? 0.0 : log->epochs.back().train_loss;
  }
}

// ---------------------------------------------------------------------------
// Head distributions
// ---------------------------------------------------------------------------
namespace {
MixtureParams mixture_from_raw(const float* a, const float* mu, const float* sr,
                               int g) {
  // Transform in double so the weights sum to 1 exactly enough to validate.
  std::vector<double> ad(a, a + g), srd(sr, sr + g);
  MixtureParams p;
  p.alpha.resize(g);
  p.sigma.resize(g);
  p.mu.assign(mu, mu + g);
  nn::mdn_transform<double>(ad, srd, p.alpha, p.sigma, nn::kSigmaMin,
                            nn::kSigmaMax);
  return p;
}
}  // namespace

std::vector<MixtureParams> StanModel::head_mixture_batch(
    const nn::Tensor& windows, int head) const {
  Head& h = heads_.at(head);
  if (!h.mdn)
    throw Error("head '" + h.name + "' is categorical, not continuous");
  nn::Tensor masked = windows;
  apply_mask(masked, cfg_.mask, schema_, head);
  const nn::Tensor& feat = h.features(masked, false);
  nn::Tensor ao, mo, so;
  h.alpha->forward(feat, ao, false);
  h.mu->forward(feat, mo, false);
  h.sraw->forward(feat, so, false);
  const int g = cfg_.components;
  std::vector<MixtureParams> out;
  out.reserve(windows.shape().n);
  for (int b = 0; b < windows.shape().n; ++b)
    out.push_back(mixture_from_raw(ao.data() + b * static_cast<size_t>(g),
                                   mo.data() + b * static_cast<size_t>(g),
                                   so.data() + b * static_cast<size_t>(g), g));
  return out;
}

MixtureParams StanModel::head_mixture(const nn::Tensor& window,
                                      int head) const {
  return head_mixture_batch(window, head).front();
}

std::vector<double> StanModel::head_categorical(const nn::Tensor& window,
                                                int head) const {
  Head& h = heads_.at(head);
  if (h.mdn)
    throw Error("head '" + h.name + "' is continuous, not categorical");
  nn::Tensor masked = window;
  apply_mask(masked, cfg_.mask, schema_, head);
  const nn::Tensor& feat = h.features(masked, false);
  nn::Tensor lo;
  h.logits->forward(feat, lo, false);
  const int C = lo.shape().per_item();
  // Softmax in double for an exactly-normalized probability vector.
  std::vector<double> probs(C);
  double mx = lo[0];
  for (int i = 1; i < C; ++i) mx = std::max(mx, static_cast<double>(lo[i]));
  double total = 0;
  for (int i = 0; i < C; ++i) {
    probs[i] = std::exp(static_cast<double>(lo[i]) - mx);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------
void StanModel::sample_row(std::vector<float>& window, std::vector<double>& raw,
                           Rng& rng) const {
  const int width = schema_.width();
  const int k = cfg_.k;
  nn::Tensor win({1, 1, k + 1, width});
  for (int j : schema_.generation_order()) {
    const ExpandedAttribute& e = schema_.expanded()[j];
    std::copy(window.begin(), window.end(), win.data());
    // head_mixture/head_categorical apply the visibility mask internally.
    float* cur = window.data() + static_cast<size_t>(k) * width;
    if (e.cardinality == 0) {
      const MixtureParams p = head_mixture(win, j);
      const double s = std::clamp(sample_mixture(p, rng), 0.0, 1.0);
      cur[e.col] = static_cast<float>(s);
      raw[j] = scalers_.unscale(j, s);
    } else {
      const std::vector<double> probs = head_categorical(win, j);
      const int idx = rng.categorical(probs);
      raw[j] = idx;
      if (e.onehot)
        cur[e.col + idx] = 1.0f;
      else
        cur[e.col] = static_cast<float>(scalers_.scale(j, idx));
    }
  }
}

DataTable StanModel::generate_table(size_t rows, Rng& rng) const {
  if (heads_.empty()) throw Error("model has no trained heads");
  const int width = schema_.width();
  const int k = cfg_.k;
  std::vector<float> window(static_cast<size_t>(k + 1) * width, 0.0f);
  std::vector<double> raw(schema_.num_expanded(), 0.0);
  DataTable out(schema_);
  out.reserve(rows);
  for (size_t i = 0; i < rows; ++i) {
    std::fill(window.begin() + static_cast<size_t>(k) * width, window.end(),
              0.0f);
    sample_row(window, raw, rng);
    out.append_row(raw);
    // Slide the context: drop the oldest row.
    std::memmove(window.data(), window.data() + width,
                 static_cast<size_t>(k) * width * sizeof(float));
  }
  return out;
}

std::vector<FlowRecord> StanModel::generate_flows(const GenerateOptions& opt,
                                                  Rng& rng) const {
  if (!schema_.is_netflow())
    throw Error("generate_flows requires the netflow schema");
  if (opt.rows == 0 && opt.horizon <= 0)
    throw ConfigError("generation needs a row count or a time horizon");
  const size_t hard_cap =
      opt.rows > 0 ? opt.rows
                   : (opt.max_rows > 0 ? opt.max_rows : size_t{10000000});

  const int width = schema_.width();
  const int k = cfg_.k;
  std::vector<float> window(static_cast<size_t>(k + 1) * width, 0.0f);
  std::vector<double> raw(schema_.num_expanded(), 0.0);
  std::vector<FlowRecord> flows;
  double prev_te = opt.start_te;
  while (flows.size() < hard_cap) {
    std::fill(window.begin() + static_cast<size_t>(k) * width, window.end(),
              0.0f);
    sample_row(window, raw, rng);
    DataTable one(schema_);
    one.append_row(raw);
    const FlowRecord f = decode_row(one, 0, prev_te, rng);
    if (opt.horizon > 0 && f.te > opt.start_te + opt.horizon) break;
    flows.push_back(f);
    prev_te = f.te;
    std::memmove(window.data(), window.data() + width,
                 static_cast<size_t>(k) * width * sizeof(float));
  }
  return flows;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------
void StanModel::save(const std::string& path) const {
  Checkpoint ck;
  ck.set_magic(kStanMagic);
  ck.meta["config"] = cfg_.to_json();
  ck.meta["schema"] = schema_.to_json();
  ck.meta["scalers"] = scalers_.to_json();
  nlohmann::json heads = nlohmann::json::array();
  for (auto& h : heads_) {
    heads.push_back({{"name", h.name}, {"kind", h.mdn ? "mixture" : "softmax"}});
    const std::string prefix = "h" + std::to_string(h.j) + ".";
    for (const nn::ParamRef& p : h.all_tensors()) {
      NamedBlob b;
      b.name = prefix + p.name;
      const nn::Shape s = p.value->shape();
      b.dims = {static_cast<uint32_t>(s.n), static_cast<uint32_t>(s.c),
                static_cast<uint32_t>(s.h), static_cast<uint32_t>(s.w)};
      b.data = p.value->vec();
      ck.blobs.push_back(std::move(b));
    }
  }
  ck.meta["heads"] = heads;
  write_checkpoint(path, ck);
}

StanModel StanModel::load(const std::string& path) {
  const Checkpoint ck = read_checkpoint(path, kStanMagic);
  StanModel m;
  try {
    m.schema_ = AttributeSchema::from_json(ck.meta.at("schema"));
    m.cfg_ = TrainConfig::from_json(ck.meta.at("config"));
    m.scalers_ = ScalerParams::from_json(ck.meta.at("scalers"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint metadata is malformed: " + std::string(e.what()));
  }
  m.build_heads();
  for (auto& h : m.heads_) {
    const std::string prefix = "h" + std::to_string(h.j) + ".";
    for (nn::ParamRef p : h.all_tensors()) {
      const NamedBlob& b = ck.blob(prefix + p.name);
      if (b.data.size() != p.value->size())
        throw IoError("checkpoint blob '" + b.name + "' has " +
                      std::to_string(b.data.size()) + " values, expected " +
                      std::to_string(p.value->size()));
      p.value->vec() = b.data;
    }
  }
  return m;
}

}  // namespace stan
