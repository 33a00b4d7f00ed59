#include <benchmark/benchmark.h>

#include "binfair/info_theory.hpp"
#include "binfair/rng.hpp"

using namespace binfair;

namespace {

Matrix random_thetas(Eigen::Index rows, Eigen::Index width, std::uint64_t seed) {
  Rng rng(seed);
  Matrix t(rows, width);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(0.05, 0.95);
  return t;
}

Matrix random_bits(Eigen::Index rows, Eigen::Index width, std::uint64_t seed) {
  Rng rng(seed);
  Matrix t(rows, width);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  return t;
}

std::vector<int> groups_for(Eigen::Index rows) {
  std::vector<int> g(static_cast<std::size_t>(rows));
  for (std::size_t r = 0; r < g.size(); ++r) g[r] = static_cast<int>(r % 2);
  return g;
}

void BM_LayerBound(benchmark::State& state) {
  const Matrix t = random_thetas(state.range(0), 8, 1);
  const GroupedThetas g(t, groups_for(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(layer_mi_bound(g).bits);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LayerBound)->Arg(128)->Arg(4096);

void BM_LayerBoundGradient(benchmark::State& state) {
  const Matrix t = random_thetas(state.range(0), 8, 2);
  const GroupedThetas g(t, groups_for(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(layer_mi_bound_gradient(g).data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LayerBoundGradient)->Arg(128)->Arg(4096);

void BM_SoftJointMI(benchmark::State& state) {
  const Matrix t = random_thetas(128, state.range(0), 3);
  const auto g = groups_for(128);
  for (auto _ : state) benchmark::DoNotOptimize(joint_mi(t, g, HistogramKind::soft).bits);
}
BENCHMARK(BM_SoftJointMI)->DenseRange(4, 12, 4);

void BM_SoftJointMIGradient(benchmark::State& state) {
  const Matrix t = random_thetas(128, state.range(0), 4);
  const auto g = groups_for(128);
  for (auto _ : state) benchmark::DoNotOptimize(joint_mi_soft_gradient(t, g).data());
}
BENCHMARK(BM_SoftJointMIGradient)->DenseRange(4, 12, 4);

void BM_HardJointMI(benchmark::State& state) {
  const Matrix t = random_bits(5000, state.range(0), 5);
  const auto g = groups_for(5000);
  for (auto _ : state) benchmark::DoNotOptimize(joint_mi(t, g, HistogramKind::hard).bits);
}
BENCHMARK(BM_HardJointMI)->Arg(8)->Arg(24);

}  // namespace
