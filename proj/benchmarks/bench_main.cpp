#include <benchmark/benchmark.h>

#include <random>

#include "chemvise/augment.hpp"
#include "chemvise/classify.hpp"
#include "chemvise/embedder.hpp"

using namespace chemvise;

namespace {

Eigen::MatrixXd noise(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  return Eigen::MatrixXd::NullaryExpr(r, c, [&]() { return n(rng); });
}

// One forward/backward pass over a batch of 8 windows, 4.0 s at 50 Hz x 8 sensors.
void BM_LossAndGrad(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  TrainConfig cfg;
  cfg.width = width;
  const MLPModel model = init_mlp(layer_dims_for(1600, cfg, 512), 1);
  const auto x = noise(1600, 8, 2);
  const auto y = noise(512, 8, 3);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(model, x, y).loss);
}
BENCHMARK(BM_LossAndGrad)->Arg(128)->Arg(512)->Unit(benchmark::kMicrosecond);

void BM_LinearSvc(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix X = noise(n, 512, 4);
  std::vector<bool> y(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = X(i, 0) + 0.3 * X(i, 1) > 0;
  for (auto _ : state) benchmark::DoNotOptimize(train_linear_svc(X, y, 2e-3, 1.0, 5).bias);
}
BENCHMARK(BM_LinearSvc)->Arg(80)->Arg(320)->Unit(benchmark::kMillisecond);

void BM_Jacobi(benchmark::State& state) {
  const auto d = state.range(0);
  const Eigen::MatrixXd a = noise(d, d, 6);
  const Eigen::MatrixXd s = a * a.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(jacobi_eigen(s).eigenvalues.sum());
}
BENCHMARK(BM_Jacobi)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_AugmentBatch(benchmark::State& state) {
  std::vector<TrainingSample> batch(8);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    batch[i].features = noise(1600, 1, i);
    batch[i].target = noise(512, 1, 100 + i);
  }
  MixPolicy policy;
  Rng rng(7);
  for (auto _ : state) benchmark::DoNotOptimize(augment_batch(batch, policy, rng).size());
}
BENCHMARK(BM_AugmentBatch);

}  // namespace

BENCHMARK_MAIN();
