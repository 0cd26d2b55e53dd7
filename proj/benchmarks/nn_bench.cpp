#include <benchmark/benchmark.h>

#include "spect/nn/cnnr.hpp"
#include "spect/nn/layers.hpp"
#include "spect/nn/ssim_loss.hpp"
#include "spect/rng.hpp"

using namespace spect;
using namespace spect::nn;

namespace {

Tensor<float> random_tensor(Shape dims, std::uint64_t seed) {
  Tensor<float> t(std::move(dims));
  Rng rng(seed);
  for (auto& v : t.values()) v = static_cast<float>(rng.next_unit());
  return t;
}

}  // namespace

static void BM_Conv3x3Forward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  Conv2d<float> conv(c, c, 3);
  const auto x = random_tensor({8, c, 32, 32}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x, Mode::kTrain).data());
}
BENCHMARK(BM_Conv3x3Forward)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_Conv3x3Backward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  Conv2d<float> conv(c, c, 3);
  const auto x = random_tensor({8, c, 32, 32}, 1);
  const auto g = random_tensor({8, c, 32, 32}, 2);
  conv.forward(x, Mode::kTrain);
  for (auto _ : state) {
    conv.weight().zero_grad();
    conv.bias().zero_grad();
    benchmark::DoNotOptimize(conv.backward(g).data());
  }
}
BENCHMARK(BM_Conv3x3Backward)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_SsimLoss(benchmark::State& state) {
  const auto p = random_tensor({16, 1, 64, 64}, 3);
  const auto t = random_tensor({16, 1, 64, 64}, 4);
  SsimConfig cfg;
  if (state.range(0) == 0) cfg.window = SsimWindow::kGlobal;
  for (auto _ : state) benchmark::DoNotOptimize(ssim_loss(p, t, cfg).loss);
}
BENCHMARK(BM_SsimLoss)->Arg(0)->Arg(8);

static void BM_Desk64TrainStep(benchmark::State& state) {
  auto model = CnnrModel<float>::build(ScalePreset::kDesk64, 1);
  Shape in = model.input_shape();
  in.insert(in.begin(), 16);
  const auto x = random_tensor(in, 5);
  const auto t = random_tensor({16, 1, 64, 64}, 6);
  SsimConfig cfg;
  cfg.window = SsimWindow::kGlobal;
  for (auto _ : state) {
    model.zero_grad();
    const auto y = model.forward(x, Mode::kTrain);
    const auto l = ssim_loss(y, t, cfg);
    benchmark::DoNotOptimize(model.backward(l.grad).data());
  }
}
BENCHMARK(BM_Desk64TrainStep)->Unit(benchmark::kMillisecond);

static void BM_Desk64Inference(benchmark::State& state) {
  auto model = CnnrModel<float>::build(ScalePreset::kDesk64, 1);
  Shape in = model.input_shape();
  in.insert(in.begin(), 1);
  const auto x = random_tensor(in, 7);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x, Mode::kInference).data());
}
BENCHMARK(BM_Desk64Inference)->Unit(benchmark::kMillisecond);
