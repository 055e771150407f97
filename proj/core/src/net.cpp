#include "stan/net.hpp"

#include <cmath>

namespace stan::nn {

std::string layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv3x3: return "conv3x3";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool2: return "maxpool2";
    case LayerKind::kDense: return "dense";
    case LayerKind::kSoftmax: return "softmax";
  }
  throw Error("unknown layer kind");
}

LayerKind layer_kind_from_name(const std::string& name) {
  if (name == "conv3x3") return LayerKind::kConv3x3;
  if (name == "batchnorm") return LayerKind::kBatchNorm;
  if (name == "relu") return LayerKind::kRelu;
  if (name == "maxpool2") return LayerKind::kMaxPool2;
  if (name == "dense") return LayerKind::kDense;
  if (name == "softmax") return LayerKind::kSoftmax;
  throw ConfigError("unknown layer kind '" + name + "'");
}

NetworkSpec& NetworkSpec::conv3x3(int filters) {
  layers.push_back({LayerKind::kConv3x3, filters});
  return *this;
}
NetworkSpec& NetworkSpec::batchnorm() {
  layers.push_back({LayerKind::kBatchNorm, 0});
  return *this;
}
NetworkSpec& NetworkSpec::relu() {
  layers.push_back({LayerKind::kRelu, 0});
  return *this;
}
NetworkSpec& NetworkSpec::maxpool2() {
  layers.push_back({LayerKind::kMaxPool2, 0});
  return *this;
}
NetworkSpec& NetworkSpec::dense(int units) {
  layers.push_back({LayerKind::kDense, units});
  return *this;
}
NetworkSpec& NetworkSpec::softmax() {
  layers.push_back({LayerKind::kSoftmax, 0});
  return *this;
}

nlohmann::json NetworkSpec::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& l : layers) {
    nlohmann::json e;
    e["kind"] = layer_kind_name(l.kind);
    if (l.units > 0) e["units"] = l.units;
    arr.push_back(e);
  }
  return arr;
}

NetworkSpec NetworkSpec::from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  for (const auto& e : j) {
    LayerSpec l;
    l.kind = layer_kind_from_name(e.at("kind").get<std::string>());
    l.units = e.value("units", 0);
    if ((l.kind == LayerKind::kConv3x3 || l.kind == LayerKind::kDense) &&
        l.units <= 0)
      throw ConfigError("layer '" + layer_kind_name(l.kind) +
                        "' requires positive units");
    spec.layers.push_back(l);
  }
  return spec;
}

// --------------------------------------------------------------------------
// ConvLayer
// --------------------------------------------------------------------------
Shape ConvLayer::infer(Shape in) {
  if (filters_ <= 0) throw ShapeError("conv3x3: filters must be positive");
  w.resize({filters_, in.c, 3, 3});
  b.resize({filters_, 1, 1, 1});
  gw.resize(w.shape());
  gb.resize(b.shape());
  return {in.n, filters_, in.h, in.w};
}

void ConvLayer::init(Rng& rng) {
  uniform_init(w, 1.0f / 9.0f, rng);
  b.zero();
}

void ConvLayer::forward(const Tensor& x, Tensor& y, bool) {
  conv3x3_forward(x, w, b.vec(), y);
}

void ConvLayer::backward(const Tensor& x, const Tensor&, const Tensor& gy,
                         Tensor& gx) {
  conv3x3_backward(x, w, gy, &gx, &gw, &gb.vec());
}

std::vector<ParamRef> ConvLayer::params() {
  return {{"w", &w, &gw}, {"b", &b, &gb}};
}

// --------------------------------------------------------------------------
// BatchNormLayer
// --------------------------------------------------------------------------
Shape BatchNormLayer::infer(Shape in) {
  gamma.resize({in.c, 1, 1, 1});
  beta.resize({in.c, 1, 1, 1});
  ggamma.resize(gamma.shape());
  gbeta.resize(beta.shape());
  running_mean.resize({in.c, 1, 1, 1});
  running_var.resize({in.c, 1, 1, 1});
  for (size_t i = 0; i < running_var.size(); ++i) running_var[i] = 1.0f;
  return in;
}

void BatchNormLayer::init(Rng&) {
  gamma.fill(1.0f);
  beta.zero();
  running_mean.zero();
  running_var.fill(1.0f);
}

void BatchNormLayer::forward(const Tensor& x, Tensor& y, bool train) {
  if (train) {
    rm_ = running_mean.vec();
    rv_ = running_var.vec();
    batchnorm_forward_train(x, gamma.vec(), beta.vec(), rm_, rv_, momentum,
                            eps, y, cache_);
    running_mean.vec() = rm_;
    running_var.vec() = rv_;
  } else {
    batchnorm_forward_eval(x, gamma.vec(), beta.vec(), running_mean.vec(),
                           running_var.vec(), eps, y);
  }
}

void BatchNormLayer::backward(const Tensor&, const Tensor&, const Tensor& gy,
                              Tensor& gx) {
  batchnorm_backward(cache_, gamma.vec(), gy, gx, ggamma.vec(), gbeta.vec());
}

std::vector<ParamRef> BatchNormLayer::params() {
  return {{"gamma", &gamma, &ggamma}, {"beta", &beta, &gbeta}};
}

std::vector<ParamRef> BatchNormLayer::state() {
  return {{"running_mean", &running_mean, nullptr},
          {"running_var", &running_var, nullptr}};
}

// --------------------------------------------------------------------------
// ReluLayer / MaxPoolLayer / SoftmaxLayer
// --------------------------------------------------------------------------
void ReluLayer::forward(const Tensor& x, Tensor& y, bool) {
  relu_forward(x, y);
}
void ReluLayer::backward(const Tensor& x, const Tensor&, const Tensor& gy,
                         Tensor& gx) {
  relu_backward(x, gy, gx);
}

Shape MaxPoolLayer::infer(Shape in) {
  if (in.h / 2 == 0 || in.w / 2 == 0)
    throw ShapeError("maxpool2: input " + in.str() + " too small to pool");
  return {in.n, in.c, in.h / 2, in.w / 2};
}
void MaxPoolLayer::forward(const Tensor& x, Tensor& y, bool) {
  maxpool2_forward(x, y, argmax_);
}
void MaxPoolLayer::backward(const Tensor& x, const Tensor&, const Tensor& gy,
                            Tensor& gx) {
  maxpool2_backward(argmax_, gy, x.shape(), gx);
}

void SoftmaxLayer::forward(const Tensor& x, Tensor& y, bool) {
  softmax_forward(x, y);
}
void SoftmaxLayer::backward(const Tensor&, const Tensor& y, const Tensor& gy,
                            Tensor& gx) {
  softmax_backward(y, gy, gx);
}

// --------------------------------------------------------------------------
// DenseLayer
// --------------------------------------------------------------------------
Shape DenseLayer::infer(Shape in) {
  if (units_ <= 0) throw ShapeError("dense: units must be positive");
  const long fan_in = in.per_item();
  w.resize({units_, static_cast<int>(fan_in), 1, 1});
  b.resize({units_, 1, 1, 1});
  gw.resize(w.shape());
  gb.resize(b.shape());
  return {in.n, units_, 1, 1};
}

void DenseLayer::init(Rng& rng) {
  const float bound = 1.0f / static_cast<float>(w.shape().per_item());
  uniform_init(w, bound, rng);
  b.zero();
}

void DenseLayer::forward(const Tensor& x, Tensor& y, bool) {
  dense_forward(x, w, b.vec(), y);
}

void DenseLayer::backward(const Tensor& x, const Tensor&, const Tensor& gy,
                          Tensor& gx) {
  dense_backward(x, w, gy, &gx, &gw, &gb.vec());
}

std::vector<ParamRef> DenseLayer::params() {
  return {{"w", &w, &gw}, {"b", &b, &gb}};
}

// --------------------------------------------------------------------------
// Net
// --------------------------------------------------------------------------
std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::kConv3x3: return std::make_unique<ConvLayer>(spec.units);
    case LayerKind::kBatchNorm: return std::make_unique<BatchNormLayer>();
    case LayerKind::kRelu: return std::make_unique<ReluLayer>();
    case LayerKind::kMaxPool2: return std::make_unique<MaxPoolLayer>();
    case LayerKind::kDense: return std::make_unique<DenseLayer>(spec.units);
    case LayerKind::kSoftmax: return std::make_unique<SoftmaxLayer>();
  }
  throw Error("unknown layer kind");
}

void Net::build(const NetworkSpec& spec, Shape input) {
  spec_ = spec;
  layers_.clear();
  names_.clear();
  in_shape_ = input;
  in_shape_.n = 1;
  Shape cur = in_shape_;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    auto layer = make_layer(spec.layers[i]);
    const std::string name =
        layer_kind_name(spec.layers[i].kind) + std::to_string(i);
    try {
      cur = layer->infer(cur);
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + name + ": " + e.what());
    }
    names_.push_back(name);
    layers_.push_back(std::move(layer));
  }
  out_shape_ = cur;
  acts_.assign(layers_.size() + 1, Tensor());
}

void Net::init(Rng& rng) {
  for (auto& l : layers_) l->init(rng);
}

const Tensor& Net::forward(const Tensor& x, bool train) {
  if (acts_.empty()) acts_.assign(1, Tensor());
  acts_[0] = x;
  for (size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->forward(acts_[i], acts_[i + 1], train);
  return acts_.back();
}

void Net::backward(const Tensor& gy, Tensor* gx) {
  Tensor g = gy;
  Tensor gprev;
  for (size_t i = layers_.size(); i > 0; --i) {
    layers_[i - 1]->backward(acts_[i - 1], acts_[i], g, gprev);
    std::swap(g, gprev);
  }
  if (gx) *gx = g;
}

std::vector<ParamRef> Net::params() {
  std::vector<ParamRef> out;
  for (size_t i = 0; i < layers_.size(); ++i)
    for (ParamRef p : layers_[i]->params()) {
      p.name = names_[i] + "." + p.name;
      out.push_back(p);
    }
  return out;
}

std::vector<ParamRef> Net::state() {
  std::vector<ParamRef> out;
  for (size_t i = 0; i < layers_.size(); ++i)
    for (ParamRef p : layers_[i]->state()) {
      p.name = names_[i] + "." + p.name;
      out.push_back(p);
    }
  return out;
}

void Net::zero_grads() {
  for (auto& l : layers_)
    for (ParamRef p : l->params())
      if (p.grad) p.grad->zero();
}

// --------------------------------------------------------------------------
// Init and Adam
// --------------------------------------------------------------------------
void uniform_init(Tensor& t, float bound, Rng& rng) {
  for (size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<float>(rng.uniform(-bound, bound));
}

Adam::Adam(AdamConfig cfg, std::vector<ParamRef> params)
    : cfg_(cfg), params_(std::move(params)) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].value || !params_[i].grad)
      throw Error("Adam: parameter '" + params_[i].name +
                  "' has no gradient buffer");
    m_[i].assign(params_[i].value->size(), 0.0f);
    v_[i].assign(params_[i].value->size(), 0.0f);
  }
}

void Adam::step() {
  ++t_;
  const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t_));
  const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = *params_[i].value;
    const Tensor& g = *params_[i].grad;
    for (size_t k = 0; k < p.size(); ++k) {
      const float gk = g[k];
      if (!std::isfinite(gk))
        throw Error("Adam: non-finite gradient in '" + params_[i].name + "'");
      m_[i][k] = cfg_.beta1 * m_[i][k] + (1.0f - cfg_.beta1) * gk;
      v_[i][k] = cfg_.beta2 * v_[i][k] + (1.0f - cfg_.beta2) * gk * gk;
      const float mhat = m_[i][k] / bc1;
      const float vhat = v_[i][k] / bc2;
      p[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace stan::nn
