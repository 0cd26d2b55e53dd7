#include <benchmark/benchmark.h>

#include "spect/metrics.hpp"
#include "spect/mlem.hpp"
#include "spect/noise.hpp"
#include "spect/phantoms.hpp"
#include "spect/projector.hpp"

using namespace spect;

namespace {

struct Problem {
  SystemMatrix p;
  ActivityImage truth;
  Sinogram y;
};

Problem make_problem(std::size_t n) {
  SystemMatrix p = build_system_matrix({n, 24, n, 360.0, 1.0});
  ActivityImage truth = shepp_logan(n, SheppLoganVariant::kModified);
  Sinogram y = forward_project(p, truth);
  return {std::move(p), std::move(truth), std::move(y)};
}

}  // namespace

static void BM_MlemStep(benchmark::State& state) {
  const Problem pr = make_problem(static_cast<std::size_t>(state.range(0)));
  const double init = mlem_default_init(pr.p, pr.y.data());
  MlemState s = mlem_init(pr.p, pr.y.data(), init);
  for (auto _ : state) {
    s = mlem_step(pr.p, pr.y.data(), std::move(s));
    benchmark::DoNotOptimize(s.estimate.data());
  }
}
BENCHMARK(BM_MlemStep)->Arg(64)->Arg(128);

static void BM_Mlem50(benchmark::State& state) {
  const Problem pr = make_problem(64);
  const double init = mlem_default_init(pr.p, pr.y.data());
  for (auto _ : state) {
    ActivityImage f = mlem_reconstruct(pr.p, pr.y, 50, init);
    benchmark::DoNotOptimize(f.data().data());
  }
}
BENCHMARK(BM_Mlem50)->Unit(benchmark::kMillisecond);

static void BM_SsimWindowed(benchmark::State& state) {
  const ActivityImage a = shepp_logan(64, SheppLoganVariant::kModified);
  const ActivityImage b = shepp_logan(64, SheppLoganVariant::kOriginal);
  const SsimConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_pair(a, b, cfg).ssim);
}
BENCHMARK(BM_SsimWindowed);
