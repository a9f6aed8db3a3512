#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "heatax/kernels.hpp"

using namespace heatax::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * (1.0 + std::abs(b[i]))) << i;
}

std::vector<Conv2dGeometry> geometries() {
  return {
      {.in_channels = 1, .in_height = 3, .in_width = 3, .out_channels = 1, .kernel_h = 2, .kernel_w = 2},
      {.in_channels = 3, .in_height = 7, .in_width = 5, .out_channels = 4, .kernel_h = 3, .kernel_w = 3,
       .stride = 2, .pad = 1},
      {.in_channels = 3, .in_height = 32, .in_width = 32, .out_channels = 8, .kernel_h = 3, .kernel_w = 3,
       .stride = 1, .pad = 1},
      {.in_channels = 8, .in_height = 16, .in_width = 16, .out_channels = 16, .kernel_h = 3, .kernel_w = 3,
       .stride = 1, .pad = 1},
      {.in_channels = 2, .in_height = 9, .in_width = 6, .out_channels = 3, .kernel_h = 1, .kernel_w = 4,
       .stride = 3, .pad = 2},
  };
}

}  // namespace

TEST(Kernels, ConvForwardParallelMatchesSerial) {
  std::mt19937_64 rng(1);
  for (const auto& g : geometries()) {
    const auto in = random_vec(g.input_size(), rng);
    const auto w = random_vec(g.weight_size(), rng);
    std::vector<double> a(g.output_size()), b(g.output_size());
    conv2d_forward(in, w, g, a);
    serial::conv2d_forward(in, w, g, b);
    expect_close(a, b);
  }
}

TEST(Kernels, ConvBackwardParallelMatchesSerial) {
  std::mt19937_64 rng(2);
  for (const auto& g : geometries()) {
    const auto in = random_vec(g.input_size(), rng);
    const auto w = random_vec(g.weight_size(), rng);
    const auto go = random_vec(g.output_size(), rng);
    std::vector<double> gi_a(g.input_size(), 0.5), gi_b(g.input_size(), 0.5);
    conv2d_backward_input(go, w, g, gi_a);
    serial::conv2d_backward_input(go, w, g, gi_b);
    expect_close(gi_a, gi_b);
    std::vector<double> gw_a(g.weight_size(), -0.25), gw_b(g.weight_size(), -0.25);
    conv2d_backward_weight(go, in, g, gw_a);
    serial::conv2d_backward_weight(go, in, g, gw_b);
    expect_close(gw_a, gw_b);
  }
}

TEST(Kernels, ConvBackwardIsAdjointOfForward) {
  // <conv(x, w), y> == <x, conv^T(y, w)> == <w, dW(y, x)>
  std::mt19937_64 rng(3);
  for (const auto& g : geometries()) {
    const auto x = random_vec(g.input_size(), rng);
    const auto w = random_vec(g.weight_size(), rng);
    const auto y = random_vec(g.output_size(), rng);
    std::vector<double> out(g.output_size()), gx(g.input_size()), gw(g.weight_size());
    serial::conv2d_forward(x, w, g, out);
    serial::conv2d_backward_input(y, w, g, gx);
    serial::conv2d_backward_weight(y, x, g, gw);
    double lhs = 0, rx = 0, rw = 0;
    for (std::size_t i = 0; i < out.size(); ++i) lhs += out[i] * y[i];
    for (std::size_t i = 0; i < x.size(); ++i) rx += x[i] * gx[i];
    for (std::size_t i = 0; i < w.size(); ++i) rw += w[i] * gw[i];
    EXPECT_NEAR(lhs, rx, 1e-10);
    EXPECT_NEAR(lhs, rw, 1e-10);
  }
}

TEST(Kernels, MatmulParallelMatchesSerial) {
  std::mt19937_64 rng(4);
  const std::size_t dims[][3] = {{1, 1, 1}, {3, 4, 1}, {7, 5, 3}, {64, 512, 1}, {2, 1024, 40}};
  for (const auto& d : dims) {
    const std::size_t m = d[0], k = d[1], n = d[2];
    const auto a = random_vec(m * k, rng);
    const auto b = random_vec(k * n, rng);
    const auto gc = random_vec(m * n, rng);
    std::vector<double> c1(m * n), c2(m * n);
    matmul(a, b, m, k, n, c1);
    serial::matmul(a, b, m, k, n, c2);
    expect_close(c1, c2);
    std::vector<double> ga1(m * k, 1.0), ga2(m * k, 1.0);
    matmul_backward_a(gc, b, m, k, n, ga1);
    serial::matmul_backward_a(gc, b, m, k, n, ga2);
    expect_close(ga1, ga2);
    std::vector<double> gb1(k * n, 1.0), gb2(k * n, 1.0);
    matmul_backward_b(gc, a, m, k, n, gb1);
    serial::matmul_backward_b(gc, a, m, k, n, gb2);
    expect_close(gb1, gb2);
  }
}

TEST(Kernels, MatmulSmallHandExample) {
  const std::vector<double> a{1, 2, 3, 4};  // [[1,2],[3,4]]
  const std::vector<double> b{5, 6};
  std::vector<double> c(2);
  matmul(a, b, 2, 2, 1, c);
  EXPECT_EQ(c, (std::vector<double>{17, 39}));
}
