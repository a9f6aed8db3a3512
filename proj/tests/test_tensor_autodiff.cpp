#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "heatax/autodiff.hpp"
#include "heatax/error.hpp"
#include "heatax/tensor.hpp"

using namespace heatax;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected heatax::Error";
  return ErrorCode::invalid_state;
}

}  // namespace

TEST(Tensor, ShapeAndDataMustAgree) {
  EXPECT_EQ(code_of([] { Tensor({2, 2}, std::vector<double>{1, 2, 3}); }), ErrorCode::shape_mismatch);
  EXPECT_EQ(code_of([] { Tensor(Shape{2, 0}); }), ErrorCode::invalid_argument);
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(shape_str(t.shape()), "[2,3]");
  EXPECT_DOUBLE_EQ(t.sum(), 9.0);
}

TEST(Tensor, ElementwiseArithmetic) {
  const Tensor a = Tensor::vector({1, -2, 3});
  const Tensor b = Tensor::vector({4, 5, -6});
  EXPECT_EQ(a + b, Tensor::vector({5, 3, -3}));
  EXPECT_EQ(a - b, Tensor::vector({-3, -7, 9}));
  EXPECT_EQ(a * b, Tensor::vector({4, -10, -18}));
  EXPECT_EQ(2.0 * a, Tensor::vector({2, -4, 6}));
  EXPECT_EQ(code_of([&] { (void)(a + Tensor::vector({1, 2})); }), ErrorCode::shape_mismatch);
}

TEST(Forward, MatmulIdentity) {
  Graph g;
  const Var m = g.constant(Tensor({2, 2}, {1, 0, 0, 1}));
  const Var v = g.constant(Tensor::vector({3, 4}));
  EXPECT_EQ(g.forward(g.matmul(m, v)), Tensor::vector({3, 4}));
}

TEST(Forward, Relu) {
  Graph g;
  EXPECT_EQ(g.forward(g.relu(g.constant(Tensor::vector({-1, 0, 2})))), Tensor::vector({0, 0, 2}));
}

TEST(Forward, ConvAllOnes) {
  Graph g;
  const Var x = g.constant(Tensor::ones({1, 3, 3}));
  const Var k = g.constant(Tensor::ones({1, 1, 2, 2}));
  EXPECT_EQ(g.forward(g.conv2d(x, k)), Tensor({1, 2, 2}, 4.0));
}

TEST(Forward, ScalarActivations) {
  Graph g;
  EXPECT_EQ(g.forward(g.tanh(g.constant(Tensor::scalar(0))))[0], 0.0);
  EXPECT_DOUBLE_EQ(g.forward(g.leaky_relu(g.constant(Tensor::scalar(-2)), 0.01))[0], -0.02);
  EXPECT_EQ(g.forward(g.sigmoid(g.constant(Tensor::scalar(0))))[0], 0.5);
}

TEST(Forward, MaxPoolKeepsFirstMaximumOnTies) {
  Graph g;
  const Var x = g.input(Tensor({1, 2, 2}, {5, 5, 1, 5}));
  const Var p = g.max_pool(x);
  ASSERT_EQ(g.value(p), Tensor({1, 1, 1}, 5.0));
  g.backward(p);
  EXPECT_EQ(g.grad(x), Tensor({1, 2, 2}, {1, 0, 0, 0}));
}

TEST(Forward, GlobalAvgPoolAndBiasAdd) {
  Graph g;
  const Var x = g.constant(Tensor({2, 1, 2}, {1, 3, -2, 2}));
  EXPECT_EQ(g.forward(g.global_avg_pool(x)), Tensor::vector({2, 0}));
  EXPECT_EQ(g.forward(g.bias_add(x, g.constant(Tensor::vector({1, -1})))), Tensor({2, 1, 2}, {2, 4, -3, 1}));
}

TEST(Forward, ShapeErrorsNameTheOp) {
  Graph g;
  const Var a = g.constant(Tensor::vector({1, 2}));
  const Var b = g.constant(Tensor::vector({1, 2, 3}));
  try {
    g.add(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::shape_mismatch);
    EXPECT_NE(std::string(e.what()).find("add"), std::string::npos);
  }
  const Var x = g.constant(Tensor::ones({3, 4, 4}));
  const Var k = g.constant(Tensor::ones({1, 2, 3, 3}));
  try {
    g.conv2d(x, k);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::shape_mismatch);
    EXPECT_NE(std::string(e.what()).find("conv2d"), std::string::npos);
  }
}

TEST(Forward, NonFiniteValuesAreRejected) {
  Graph g;
  const Var z = g.constant(Tensor::vector({0.0, 1.0}));
  EXPECT_EQ(code_of([&] { g.reciprocal(z); }), ErrorCode::numeric);
}

TEST(Backward, ReluRules) {
  auto run = [](double x, double seed, BackwardRule rule) {
    Graph g;
    const Var v = g.input(Tensor::scalar(x));
    const Var r = g.relu(v);
    g.backward(r, Tensor::scalar(seed), rule);
    return g.grad(v)[0];
  };
  EXPECT_EQ(run(-1, 1, BackwardRule::standard), 0.0);
  EXPECT_EQ(run(-1, 1, BackwardRule::deconv_relu), 1.0);
  EXPECT_EQ(run(2, -1, BackwardRule::guided_relu), 0.0);
  EXPECT_EQ(run(2, 1, BackwardRule::guided_relu), 1.0);
  EXPECT_EQ(run(2, -1, BackwardRule::deconv_relu), 0.0);
}

TEST(Backward, PerNodeOverride) {
  Graph g;
  const Var v = g.input(Tensor::scalar(-1));
  const Var r = g.relu(v);
  g.set_backward_override(r, BackwardRule::deconv_relu);
  g.backward(r);
  EXPECT_EQ(g.grad(v)[0], 1.0);
  const Var t = g.tanh(v);
  EXPECT_EQ(code_of([&] { g.set_backward_override(t, BackwardRule::guided_relu); }), ErrorCode::invalid_argument);
}

TEST(Backward, SeedShapeMustMatch) {
  Graph g;
  const Var v = g.input(Tensor::vector({1, 2}));
  const Var r = g.relu(v);
  EXPECT_EQ(code_of([&] { g.backward(r, Tensor::scalar(1)); }), ErrorCode::shape_mismatch);
}

TEST(Backward, GradBeforeBackwardIsAnError) {
  Graph g;
  const Var v = g.input(Tensor::scalar(1));
  EXPECT_EQ(code_of([&] { (void)g.grad(v); }), ErrorCode::invalid_state);
}

TEST(Backward, RescaleNeedsMatchingReference) {
  Graph g;
  const Var v = g.input(Tensor::scalar(1));
  const Var r = g.relu(v);
  EXPECT_EQ(code_of([&] { g.backward(r, Tensor::scalar(1), BackwardRule::rescale); }), ErrorCode::invalid_argument);
  Graph ref;
  ref.tanh(ref.input(Tensor::scalar(0)));
  EXPECT_EQ(code_of([&] { g.backward(r, Tensor::scalar(1), BackwardRule::rescale, &ref); }), ErrorCode::invalid_argument);
}

TEST(Backward, GradientShapesMatchValues) {
  std::mt19937_64 rng(3);
  Graph g;
  const Var x = g.input(fixtures::random_tensor({2, 5, 5}, rng));
  const Var k = g.input(fixtures::random_tensor({3, 2, 3, 3}, rng));
  const Var y = g.sum(g.max_pool(g.relu(g.conv2d(x, k, 1, 1))));
  g.backward(y);
  for (std::size_t id = 0; id < g.size(); ++id) EXPECT_EQ(g.grad(Var{id}).shape(), g.value(Var{id}).shape());
}

TEST(GradientCheck, EveryOpMatchesCentralDifferences) {
  std::mt19937_64 rng(20240601);
  for (const auto& c : fixtures::op_cases()) {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      worst = std::max(worst, fixtures::gradient_rel_error(c.fn, c.make_inputs(rng)));
    }
    EXPECT_LT(worst, 1e-6) << c.name;
  }
}

TEST(GradientCheck, TwoLayerMlpMatchesHandDerivedGradient) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor W = fixtures::random_tensor({3, 4}, rng);
    const Tensor b = fixtures::random_tensor({3}, rng);
    const Tensor v = fixtures::random_tensor({3}, rng);
    const Tensor x = fixtures::random_tensor({4}, rng);
    Graph g;
    const Var xv = g.input(x);
    const Var hidden = g.tanh(g.add(g.matmul(g.constant(W), xv), g.constant(b)));
    const Var y = g.dot(g.constant(v), hidden);
    g.backward(y);
    // dy/dx = W^T (v * (1 - tanh^2(Wx + b)))
    for (std::size_t j = 0; j < 4; ++j) {
      double expect = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        double z = b[i];
        for (std::size_t k = 0; k < 4; ++k) z += W[i * 4 + k] * x[k];
        expect += W[i * 4 + j] * v[i] * (1.0 - std::tanh(z) * std::tanh(z));
      }
      EXPECT_NEAR(g.grad(xv)[j], expect, 1e-14);
    }
  }
}

TEST(Backward, ModifiedRulesDegradeOnPositivePaths) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor W1 = fixtures::random_tensor({4, 3}, rng, 0.1, 1.0);
    const Tensor W2 = fixtures::random_tensor({2, 4}, rng, 0.1, 1.0);
    const Tensor x = fixtures::random_tensor({3}, rng, 0.1, 1.0);
    auto grad_under = [&](BackwardRule rule) {
      Graph g;
      const Var xv = g.input(x);
      const Var h = g.relu(g.matmul(g.constant(W1), xv));
      const Var y = g.relu(g.matmul(g.constant(W2), h));
      g.backward(y, Tensor::vector({1.0, 0.5}), rule);
      return g.grad(xv);
    };
    const Tensor standard = grad_under(BackwardRule::standard);
    EXPECT_EQ(grad_under(BackwardRule::deconv_relu), standard);
    EXPECT_EQ(grad_under(BackwardRule::guided_relu), standard);
  }
}
