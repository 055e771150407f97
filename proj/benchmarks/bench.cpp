// Microbenchmarks for the kernels that dominate training and generation:
// the 3x3 convolution, the dense head, the mixture-likelihood gradient,
// window encoding, autoregressive sampling and the rule checker.
//
// Run:  ./stan_bench [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include <vector>

#include "stan/layers.hpp"
#include "stan/mdn.hpp"
#include "stan/model.hpp"
#include "stan/rng.hpp"
#include "stan/rules.hpp"
#include "stan/schema.hpp"
#include "stan/table.hpp"

namespace {

using stan::nn::Tensor;

Tensor random_tensor(stan::nn::Shape s, stan::Rng& rng) {
  Tensor t(s);
  for (size_t i = 0; i < t.size(); ++i)
    t[i] = float(rng.uniform(-1.0, 1.0));
  return t;
}

// One batch through the first trunk convolution at netflow window width.
void BM_Conv3x3Forward(benchmark::State& state) {
  stan::Rng rng(1);
  const int batch = int(state.range(0));
  Tensor x = random_tensor({batch, 1, 6, 81}, rng);
  Tensor w = random_tensor({8, 1, 3, 3}, rng);
  std::vector<float> b(8, 0.1f);
  Tensor y;
  for (auto _ : state) {
    stan::nn::conv3x3_forward(x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_Conv3x3Forward)->Arg(32)->Arg(128);

void BM_Conv3x3Backward(benchmark::State& state) {
  stan::Rng rng(2);
  const int batch = int(state.range(0));
  Tensor x = random_tensor({batch, 1, 6, 81}, rng);
  Tensor w = random_tensor({8, 1, 3, 3}, rng);
  std::vector<float> b(8, 0.1f);
  Tensor y;
  stan::nn::conv3x3_forward(x, w, b, y);
  Tensor gy = random_tensor(y.shape(), rng);
  Tensor gx, gw;
  std::vector<float> gb;
  for (auto _ : state) {
    stan::nn::conv3x3_backward(x, w, gy, &gx, &gw, &gb);
    benchmark::DoNotOptimize(gx.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_Conv3x3Backward)->Arg(32)->Arg(128);

// The widest softmax head: port logits from a flattened window.
void BM_DenseForwardPortHead(benchmark::State& state) {
  stan::Rng rng(3);
  const int batch = int(state.range(0));
  const int in = 4 * 81;  // k = 3 flattened window
  Tensor x = random_tensor({batch, 1, 1, in}, rng);
  Tensor w = random_tensor({1670, 1, 1, in}, rng);
  std::vector<float> b(1670, 0.0f);
  Tensor y;
  for (auto _ : state) {
    stan::nn::dense_forward(x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_DenseForwardPortHead)->Arg(32)->Arg(128);

void BM_MixtureNllGrad(benchmark::State& state) {
  stan::Rng rng(4);
  const size_t g = size_t(state.range(0));
  std::vector<double> a(g), mu(g), s(g), ga(g), gmu(g), gs(g);
  for (size_t i = 0; i < g; ++i) {
    a[i] = rng.uniform(-1.0, 1.0);
    mu[i] = rng.uniform(-1.0, 1.0);
    s[i] = rng.uniform(-1.0, 1.0);
  }
  for (auto _ : state) {
    const double nll =
        stan::nn::mdn_nll_grad<double>(a, mu, s, 0.3, ga, gmu, gs);
    benchmark::DoNotOptimize(nll);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_MixtureNllGrad)->Arg(5)->Arg(10);

// Encoding a table and stacking a training batch of context windows.
void BM_WindowBatch(benchmark::State& state) {
  stan::Rng rng(5);
  const auto schema = stan::AttributeSchema::continuous(
      {"a", "b", "c", "d", "e", "f", "g", "h"});
  stan::DataTable tbl(schema);
  for (int i = 0; i < 4096; ++i) {
    std::vector<double> row(8);
    for (double& v : row) v = rng.uniform(0.0, 100.0);
    tbl.append_row(row);
  }
  const stan::ScalerParams scalers = stan::ScalerParams::fit(tbl);
  const std::vector<float> enc = stan::encode_table(tbl, scalers);
  stan::WindowBuilder wb(enc.data(), tbl.rows(), schema.width(), 10);
  std::vector<size_t> idx(128);
  for (auto _ : state) {
    for (size_t& v : idx) v = rng.integer(tbl.rows());
    Tensor batch = wb.batch(idx);
    benchmark::DoNotOptimize(batch.data());
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_WindowBatch);

// Autoregressive sampling throughput of a small trained model.
void BM_GenerateRows(benchmark::State& state) {
  stan::Rng rng(6);
  const auto schema = stan::AttributeSchema::continuous({"x", "y"});
  stan::DataTable tbl(schema);
  double x = 0;
  for (int i = 0; i < 512; ++i) {
    x = 0.9 * x + 0.1 * rng.normal();
    tbl.append_row(std::array<double, 2>{x, 0.9 * x + 0.1 * rng.normal()});
  }
  stan::TrainConfig tc;
  tc.k = 3;
  tc.components = 5;
  tc.epochs = 2;
  tc.batch_size = 128;
  tc.trunk.naive = true;
  const stan::StanModel model = stan::StanModel::train(tbl, tc);
  stan::Rng gen_rng(7);
  for (auto _ : state) {
    stan::DataTable out = model.generate_table(256, gen_rng);
    benchmark::DoNotOptimize(out.rows());
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_GenerateRows);

void BM_CheckRules(benchmark::State& state) {
  stan::Rng rng(8);
  std::vector<stan::FlowRecord> flows(10000);
  double te = 0;
  for (auto& f : flows) {
    te += rng.uniform(0.0, 2.0);
    f.te = te;
    f.td = rng.uniform(0.0, 5.0);
    f.sa = stan::ipv4_from_key(uint32_t(rng.raw()));
    f.da = stan::ipv4_from_key(uint32_t(rng.raw()));
    f.sp = uint16_t(rng.integer(65536));
    f.dp = uint16_t(rng.integer(65536));
    f.pr = rng.uniform() < 0.7 ? stan::Protocol::kTcp : stan::Protocol::kUdp;
    f.flg = stan::TcpFlags::from_index(int(rng.integer(64)));
    f.pkt = 1 + rng.integer(100);
    f.byt = 40 + rng.integer(100000);
  }
  for (auto _ : state) {
    const stan::RuleReport rep = stan::check_rules(flows);
    benchmark::DoNotOptimize(rep.records);
  }
  state.SetItemsProcessed(state.iterations() * int64_t(flows.size()));
}
BENCHMARK(BM_CheckRules);

}  // namespace

BENCHMARK_MAIN();
