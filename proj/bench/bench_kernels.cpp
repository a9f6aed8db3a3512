#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "heatax/kernels.hpp"

namespace k = heatax::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

k::Conv2dGeometry geometry(std::size_t size) {
  return {.in_channels = 8, .in_height = size, .in_width = size, .out_channels = 16, .kernel_h = 3, .kernel_w = 3,
          .stride = 1, .pad = 1};
}

template <bool Parallel>
void BM_Conv2dForward(benchmark::State& state) {
  const auto g = geometry(static_cast<std::size_t>(state.range(0)));
  const auto in = random_vec(g.input_size(), 1), w = random_vec(g.weight_size(), 2);
  std::vector<double> out(g.output_size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::conv2d_forward(in, w, g, out);
    } else {
      k::serial::conv2d_forward(in, w, g, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_Conv2dBackward(benchmark::State& state) {
  const auto g = geometry(static_cast<std::size_t>(state.range(0)));
  const auto in = random_vec(g.input_size(), 1), w = random_vec(g.weight_size(), 2);
  const auto go = random_vec(g.output_size(), 3);
  std::vector<double> gi(g.input_size()), gw(g.weight_size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::conv2d_backward_input(go, w, g, gi);
      k::conv2d_backward_weight(go, in, g, gw);
    } else {
      k::serial::conv2d_backward_input(go, w, g, gi);
      k::serial::conv2d_backward_weight(go, in, g, gw);
    }
    benchmark::DoNotOptimize(gi.data());
    benchmark::DoNotOptimize(gw.data());
  }
}

template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vec(n * n, 4), b = random_vec(n * n, 5);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::matmul(a, b, n, n, n, c);
    } else {
      k::serial::matmul(a, b, n, n, n, c);
    }
    benchmark::DoNotOptimize(c.data());
  }
}

}  // namespace

BENCHMARK(BM_Conv2dForward<false>)->Name("conv2d_forward/serial")->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_Conv2dForward<true>)->Name("conv2d_forward/openmp")->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_Conv2dBackward<false>)->Name("conv2d_backward/serial")->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_Conv2dBackward<true>)->Name("conv2d_backward/openmp")->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_Matmul<false>)->Name("matmul/serial")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Matmul<true>)->Name("matmul/openmp")->Arg(64)->Arg(128)->Arg(256);

BENCHMARK_MAIN();
