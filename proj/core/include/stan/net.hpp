#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stan/layers.hpp"
#include "stan/rng.hpp"
#include "stan/tensor.hpp"

// Float32 runtime network: named layers, activation caching, Adam.
namespace stan::nn {

enum class LayerKind { kConv3x3, kBatchNorm, kRelu, kMaxPool2, kDense, kSoftmax };

std::string layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

// One entry of a network description.  `units` is the filter count for
// conv3x3 and the output width for dense; other kinds ignore it.
struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  int units = 0;
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;

  NetworkSpec& conv3x3(int filters);
  NetworkSpec& batchnorm();
  NetworkSpec& relu();
  NetworkSpec& maxpool2();
  NetworkSpec& dense(int units);
  NetworkSpec& softmax();

  nlohmann::json to_json() const;
  static NetworkSpec from_json(const nlohmann::json& j);
};

// Reference to one parameter tensor and its gradient.  `grad` is null for
// persistent state that is saved but not trained (batchnorm running stats).
struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

class Layer {
 public:
  virtual ~Layer() = default;
  // Computes the output shape for the given input shape, allocating
  // parameters on first call.  Throws ShapeError on mismatch.
  virtual Shape infer(Shape in) = 0;
  virtual void init(Rng&) {}
  virtual void forward(const Tensor& x, Tensor& y, bool train) = 0;
  // x and y are the cached forward input/output for this layer.
  virtual void backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                        Tensor& gx) = 0;
  virtual std::vector<ParamRef> params() { return {}; }
  virtual std::vector<ParamRef> state() { return {}; }
  virtual LayerKind kind() const = 0;
};

class ConvLayer : public Layer {
 public:
  explicit ConvLayer(int filters) : filters_(filters) {}
  Shape infer(Shape in) override;
  void init(Rng& rng) override;
  void forward(const Tensor& x, Tensor& y, bool train) override;
  void backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                Tensor& gx) override;
  std::vector<ParamRef> params() override;
  LayerKind kind() const override { return LayerKind::kConv3x3; }

  Tensor w, b, gw, gb;

 private:
  int filters_;
};

class BatchNormLayer : public Layer {
 public:
  Shape infer(Shape in) override;
  void init(Rng& rng) override;
  void forward(const Tensor& x, Tensor& y, bool train) override;
  void backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                Tensor& gx) override;
  std::vector<ParamRef> params() override;
  std::vector<ParamRef> state() override;
  LayerKind kind() const override { return LayerKind::kBatchNorm; }

  Tensor gamma, beta, ggamma, gbeta;
  Tensor running_mean, running_var;
  float momentum = 0.1f;
  float eps = 1e-5f;

 private:
  BnCache<float> cache_;
  std::vector<float> rm_, rv_;  // scratch copies bridging Tensor <-> kernel API
};

class ReluLayer : public Layer {
 public:
  Shape infer(Shape in) override { return in; }
  void forward(const Tensor& x, Tensor& y, bool train) override;
  void backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                Tensor& gx) override;
  LayerKind kind() const override { return LayerKind::kRelu; }
};

class MaxPoolLayer : public Layer {
 public:
  Shape infer(Shape in) override;
  void forward(const Tensor& x, Tensor& y, bool train) override;
  void backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                Tensor& gx) override;
  LayerKind kind() const override { return LayerKind::kMaxPool2; }

 private:
  std::vector<long> argmax_;
};

class DenseLayer : public Layer {
 public:
  explicit DenseLayer(int units) : units_(units) {}
  Shape infer(Shape in) override;
  void init(Rng& rng) override;
  void forward(const Tensor& x, Tensor& y, bool train) override;
  void backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                Tensor& gx) override;
  std::vector<ParamRef> params() override;
  LayerKind kind() const override { return LayerKind::kDense; }

  Tensor w, b, gw, gb;

 private:
  int units_;
};

class SoftmaxLayer : public Layer {
 public:
  Shape infer(Shape in) override { return in; }
  void forward(const Tensor& x, Tensor& y, bool train) override;
  void backward(const Tensor& x, const Tensor& y, const Tensor& gy,
                Tensor& gx) override;
  LayerKind kind() const override { return LayerKind::kSoftmax; }
};

// A feed-forward stack of layers with cached activations.  Batch size may
// vary between calls; only the per-item shape is fixed at build time.
class Net {
 public:
  // Builds layers and runs shape inference from `input` (n is ignored).
  // Throws ShapeError naming the offending layer when shapes do not line up.
  void build(const NetworkSpec& spec, Shape input);
  void init(Rng& rng);

  const Tensor& forward(const Tensor& x, bool train);
  // Backward through the whole stack using activations from the last
  // forward call.  Fills `gx` with the input gradient when non-null.
  void backward(const Tensor& gy, Tensor* gx = nullptr);

  std::vector<ParamRef> params();
  std::vector<ParamRef> state();
  void zero_grads();

  bool empty() const { return layers_.empty(); }
  size_t num_layers() const { return layers_.size(); }
  Layer& layer(size_t i) { return *layers_[i]; }
  Shape input_shape() const { return in_shape_; }
  Shape output_shape() const { return out_shape_; }
  const NetworkSpec& spec() const { return spec_; }

 private:
  NetworkSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<std::string> names_;
  std::vector<Tensor> acts_;  // acts_[0] = input, acts_[i+1] = layer i output
  Shape in_shape_, out_shape_;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

// Uniform init matched to layer type: conv U[-1/9, 1/9] (1/(3*3) for the 3x3
// receptive field), dense U[-1/fan_in, 1/fan_in], biases zero, batchnorm
// gamma=1 beta=0.
void uniform_init(Tensor& t, float bound, Rng& rng);

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Adam over a fixed set of parameter references.  step() consumes the
// current gradients; moment buffers are bias-corrected.  Throws Error if any
// gradient is non-finite.
class Adam {
 public:
  Adam(AdamConfig cfg, std::vector<ParamRef> params);
  void step();
  int64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<ParamRef> params_;
  std::vector<std::vector<float>> m_, v_;
  int64_t t_ = 0;
};

}  // namespace stan::nn
