#include <gtest/gtest.h>

#include <random>

#include "gradcheck.hpp"
#include "heatax/attribution.hpp"
#include "heatax/error.hpp"
#include "heatax/model.hpp"

using namespace heatax;

namespace {

Tensor row(const Tensor& M, std::size_t j) {
  const std::size_t n = M.dim(1);
  Tensor r({n});
  for (std::size_t i = 0; i < n; ++i) r[i] = M[j * n + i];
  return r;
}

void expect_near(const Tensor& a, const Tensor& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << i;
}

Model relu_net(std::mt19937_64& rng, double lo, double hi) {
  std::vector<Layer> layers;
  layers.push_back({.name = "fc1", .kind = LayerKind::linear, .weight = fixtures::random_tensor({5, 4}, rng, lo, hi),
                    .bias = Tensor::zeros({5})});
  layers.push_back({.name = "relu1", .kind = LayerKind::relu});
  layers.push_back({.name = "fc2", .kind = LayerKind::linear, .weight = fixtures::random_tensor({3, 5}, rng, lo, hi),
                    .bias = Tensor::zeros({3})});
  return Model({4}, std::move(layers));
}

}  // namespace

TEST(MethodTag, NamesRoundTrip) {
  for (const auto& m : all_methods("conv2")) EXPECT_EQ(MethodTag::parse(m.str()), m);
  EXPECT_EQ(MethodTag::parse("layer-gradcam").layer, "conv1");
  EXPECT_THROW(MethodTag::parse("lime"), Error);
  EXPECT_EQ(all_methods().size(), 6u);
}

TEST(Attribution, LinearModelOracles) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor M = fixtures::random_tensor({3, 4}, rng);
    const Model m = make_linear_model({4}, M, fixtures::random_tensor({3}, rng));
    const Tensor x = fixtures::random_tensor({4}, rng);
    for (std::size_t j = 0; j < 3; ++j) {
      const Tensor s = attribute(m, x, j, {Method::saliency}).values;
      expect_near(s, row(M, j), 1e-12);
      expect_near(attribute(m, x, j, {Method::input_x_gradient}).values, x * row(M, j), 1e-12);
      expect_near(attribute(m, x, j, {Method::deconvolution}).values, s, 1e-12);
      expect_near(attribute(m, x, j, {Method::guided_backprop}).values, s, 1e-12);
    }
  }
}

TEST(Attribution, SaliencyIndependentOfInputForLinearModel) {
  const Tensor M({2, 3}, {1, -2, 3, 0.5, 0, -1});
  const Model m = make_linear_model({3}, M);
  EXPECT_EQ(attribute(m, Tensor::vector({9, 9, 9}), 1, {Method::saliency}).values,
            attribute(m, Tensor::vector({-1, 0, 2}), 1, {Method::saliency}).values);
}

TEST(Attribution, SaliencyAbsOption) {
  const Model m = make_linear_model({2}, Tensor({2, 2}, {1, -2, 3, 4}));
  AttributionOptions opts;
  opts.saliency_abs = true;
  EXPECT_EQ(attribute(m, Tensor::vector({0, 0}), 0, {Method::saliency}, opts).values, Tensor::vector({1, 2}));
}

TEST(Attribution, DeepLiftSingleReluEqualsInputTimesGradient) {
  // f(x) = relu(m . x) with m . x > 0
  std::vector<Layer> layers;
  layers.push_back({.name = "fc", .kind = LayerKind::linear, .weight = Tensor({2, 3}, {0.5, -0.2, 0.8, 0.1, 0.1, 0.1}),
                    .bias = Tensor::zeros({2})});
  layers.push_back({.name = "relu", .kind = LayerKind::relu});
  const Model m({3}, std::move(layers));
  const Tensor x = Tensor::vector({1.0, 2.0, 0.5});
  expect_near(attribute(m, x, 0, {Method::deeplift}).values, attribute(m, x, 0, {Method::input_x_gradient}).values,
              1e-12);
}

TEST(Attribution, DeepLiftOnActiveReluNets) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Model m = relu_net(rng, 0.05, 1.0);
    const Tensor x = fixtures::random_tensor({4}, rng, 0.1, 1.0);
    for (std::size_t j = 0; j < 3; ++j) {
      expect_near(attribute(m, x, j, {Method::deeplift}).values,
                  attribute(m, x, j, {Method::input_x_gradient}).values, 1e-12);
    }
  }
}

TEST(Attribution, DeepLiftCompletesAgainstBaseline) {
  // Rescale multipliers satisfy summation-to-delta on relu nets.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Model m = relu_net(rng, -1.0, 1.0);
    const Tensor x = fixtures::random_tensor({4}, rng);
    AttributionOptions opts;
    opts.baseline = fixtures::random_tensor({4}, rng);
    const Tensor h = attribute(m, x, 1, {Method::deeplift}, opts).values;
    const double delta = m.raw_scores(x)[1] - m.raw_scores(opts.baseline)[1];
    EXPECT_NEAR(h.sum(), delta, 1e-12);
  }
}

TEST(Attribution, InputTimesGradientIsInputTimesSaliency) {
  std::mt19937_64 rng(4);
  const Model m = make_mini_conv_net({.channels = 2, .height = 8, .width = 8, .conv1_channels = 3,
                                      .conv2_channels = 4, .kernel = 3, .classes = 3},
                                     5);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor x = fixtures::random_tensor({2, 8, 8}, rng, 0, 1);
    const Tensor s = attribute(m, x, 2, {Method::saliency}).values;
    expect_near(attribute(m, x, 2, {Method::input_x_gradient}).values, x * s, 1e-15);
  }
}

TEST(Attribution, GradCamIsNonNegativeAndChannelConstant) {
  std::mt19937_64 rng(5);
  const Model m = make_mini_conv_net({}, 6);
  for (const char* layer : {"conv1", "relu2", "conv2"}) {
    const Tensor x = fixtures::random_tensor({3, 32, 32}, rng, 0, 1);
    const Tensor h = attribute(m, x, 0, {Method::layer_gradcam, layer}).values;
    ASSERT_EQ(h.shape(), x.shape());
    for (std::size_t y = 0; y < 32; ++y) {
      for (std::size_t xx = 0; xx < 32; ++xx) {
        EXPECT_GE(h.at(0, y, xx), 0.0);
        EXPECT_EQ(h.at(1, y, xx), h.at(0, y, xx));
        EXPECT_EQ(h.at(2, y, xx), h.at(0, y, xx));
      }
    }
  }
}

TEST(Attribution, GradCamHandComputed) {
  // One conv channel, identity 1x1 kernel, then global average pool into a
  // linear head with weight 2: alpha = 2 / (H W), cam = relu(alpha * x).
  std::vector<Layer> layers;
  layers.push_back({.name = "conv1", .kind = LayerKind::conv2d, .weight = Tensor({1, 1, 1, 1}, 1.0),
                    .bias = Tensor::zeros({1})});
  layers.push_back({.name = "gap", .kind = LayerKind::global_avg_pool});
  layers.push_back({.name = "fc", .kind = LayerKind::linear, .weight = Tensor({2, 1}, {2.0, -1.0}),
                    .bias = Tensor::zeros({2})});
  const Model m({1, 2, 2}, std::move(layers));
  const Tensor x({1, 2, 2}, {0.4, -0.2, 0.0, 1.0});
  expect_near(attribute(m, x, 0, {Method::layer_gradcam, "conv1"}).values, Tensor({1, 2, 2}, {0.2, 0.0, 0.0, 0.5}),
              1e-15);
  // class 1 has alpha = -1/4: the rectifier keeps only the negative pixel
  expect_near(attribute(m, x, 1, {Method::layer_gradcam, "conv1"}).values, Tensor({1, 2, 2}, {0, 0.05, 0, 0}), 1e-15);
}

TEST(Attribution, Errors) {
  const Model m = make_mini_conv_net({}, 1);
  const Tensor x({3, 32, 32}, 0.5);
  EXPECT_THROW(attribute(m, x, 0, {Method::layer_gradcam, "nope"}), Error);
  EXPECT_THROW(attribute(m, x, 0, {Method::layer_gradcam, "fc"}), Error);
  EXPECT_THROW(attribute(m, x, 2, {Method::saliency}), Error);
  EXPECT_THROW(attribute(m, Tensor({3, 16, 16}, 0.5), 0, {Method::saliency}), Error);
}

TEST(Normalize, Examples) {
  Heatmap h{Tensor::vector({2, -4}), {}, 0, false};
  EXPECT_EQ(normalize(h).values, Tensor::vector({0.5, -1}));
  Heatmap z{Tensor::zeros({3}), {}, 0, false};
  const Heatmap nz = normalize(z);
  EXPECT_EQ(nz.values, Tensor::zeros({3}));
  EXPECT_TRUE(nz.normalized);
  Heatmap same{Tensor::vector({0.1, 0.1}), {}, 0, false};
  EXPECT_EQ(normalize(same).values, Tensor::vector({1, 1}));
}

TEST(Normalize, Idempotent) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    Heatmap h{fixtures::random_tensor({3, 4, 4}, rng, -5, 5), {}, 0, false};
    const Heatmap once = normalize(h);
    EXPECT_EQ(normalize(once).values, once.values);
    EXPECT_EQ(once.values.max_abs(), 1.0);
  }
}

TEST(AttributeAtPredicted, PerfectClassifierDirections) {
  const Model m = PerfectClassifier2D(Mat2{}, Activation::sigmoid).to_model();
  const Heatmap a = attribute_at_predicted(m, Tensor::vector({1, 0}), {Method::saliency});
  EXPECT_EQ(a.target, 0u);
  expect_near(a.values, Tensor::vector({1, 0}), 1e-15);
  const Heatmap b = attribute_at_predicted(m, Tensor::vector({0, 1}), {Method::saliency});
  EXPECT_EQ(b.target, 1u);
  expect_near(b.values, Tensor::vector({0, 1}), 1e-15);
}

TEST(AttributeAtPredicted, MiniConvNetMapsAreNormalized) {
  std::mt19937_64 rng(10);
  const Model m = make_mini_conv_net({}, 2);
  const Tensor x = fixtures::random_tensor({3, 32, 32}, rng, 0, 1);
  for (const auto& method : all_methods()) {
    const Heatmap h = attribute_at_predicted(m, x, method);
    EXPECT_EQ(h.values.shape(), x.shape()) << method.str();
    EXPECT_TRUE(h.normalized);
    const double mx = h.values.max_abs();
    EXPECT_TRUE(mx == 1.0 || mx == 0.0) << method.str();
    EXPECT_EQ(h.target, m.predict(x).label);
  }
}
