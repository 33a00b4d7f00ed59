#include <benchmark/benchmark.h>

#include "binfair/nn.hpp"
#include "binfair/rng.hpp"

using namespace binfair;

namespace {

Network tabular_network() {
  NetworkConfig nc;
  nc.input_dim = 10;
  nc.hidden = {20, 20};
  nc.binary_width = 8;
  return init_params(nc, 1);
}

Matrix batch(Eigen::Index rows) {
  Rng rng(2);
  Matrix x(rows, 10);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return x;
}

void BM_Forward(benchmark::State& state) {
  const Network net = tabular_network();
  const Matrix x = batch(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(forward(net, x, seed++, BinaryMode::stochastic).output().data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(128)->Arg(4096);

void BM_ForwardBackward(benchmark::State& state) {
  const Network net = tabular_network();
  const Matrix x = batch(state.range(0));
  const Matrix grad = Matrix::Constant(state.range(0), 1, 1.0 / static_cast<double>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const BatchTrace trace = forward(net, x, seed++, BinaryMode::stochastic);
    benchmark::DoNotOptimize(backward(net, trace, grad).front().weights.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(128)->Arg(4096);

void BM_AdamStep(benchmark::State& state) {
  Network net = tabular_network();
  AdamState adam = AdamState::for_network(net);
  const Gradients grads = zero_gradients(net);
  for (auto _ : state) adam_step(net, grads, adam);
}
BENCHMARK(BM_AdamStep);

}  // namespace
