#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gradcheck.hpp"
#include "heatax/adam.hpp"
#include "heatax/dataset.hpp"
#include "heatax/error.hpp"
#include "heatax/model.hpp"
#include "heatax/train.hpp"

using namespace heatax;

TEST(PerfectClassifier, IdentityForward) {
  const PerfectClassifier2D f(Mat2{}, Activation::identity);
  const auto y = f.forward({0.95, 0.05});
  EXPECT_EQ(y[0], 0.95);
  EXPECT_EQ(y[1], 0.05);
}

TEST(PerfectClassifier, QuarterTurnLabelsSecondClass) {
  const auto f = PerfectClassifier2D::rotated(std::numbers::pi / 2, Activation::identity);
  const auto x = f.W.apply({0.0, 1.0});
  EXPECT_NEAR(x[0], -1.0, 1e-15);
  EXPECT_NEAR(x[1], 0.0, 1e-15);
  const auto y = f.forward(x);
  EXPECT_NEAR(y[0], 0.0, 1e-15);
  EXPECT_NEAR(y[1], 1.0, 1e-15);
  EXPECT_EQ(argmax(Tensor::vector({y[0], y[1]})), 1u);
}

TEST(PerfectClassifier, RotatedSigmoid) {
  const auto f = PerfectClassifier2D::rotated(0.3, Activation::sigmoid);
  const auto y = f.forward(f.W.apply({0.7, 0.3}));
  EXPECT_NEAR(y[0], 1.0 / (1.0 + std::exp(-0.7)), 1e-15);
  EXPECT_NEAR(y[1], 1.0 / (1.0 + std::exp(-0.3)), 1e-15);
}

TEST(PerfectClassifier, SingularMatrixRejected) {
  EXPECT_THROW(PerfectClassifier2D(Mat2{1, 2, 2, 4}, Activation::identity), Error);
  EXPECT_THROW(Mat2({1e-7, 0, 0, 1e-7}).inverse(), Error);
}

TEST(PerfectClassifier, ArgmaxRecoversCoefficientOrder) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> d(-2, 2);
  const Activation acts[] = {Activation::identity, Activation::sigmoid, Activation::tanh, Activation::leaky_relu};
  for (int trial = 0; trial < 1000; ++trial) {
    Mat2 W{d(rng), d(rng), d(rng), d(rng)};
    if (std::abs(W.det()) < 1e-3) continue;
    const double a1 = d(rng), a2 = d(rng);
    if (a1 == a2) continue;
    const PerfectClassifier2D f(W, acts[trial % 4]);
    const auto y = f.forward(W.apply({a1, a2}));
    EXPECT_EQ(argmax(Tensor::vector({y[0], y[1]})), a1 > a2 ? 0u : 1u) << trial;
  }
}

TEST(PerfectClassifier, ModelMatchesClosedForm) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-1, 1);
  for (auto act : {Activation::identity, Activation::sigmoid, Activation::tanh, Activation::leaky_relu}) {
    const auto f = PerfectClassifier2D::rotated(d(rng) * 3, act);
    const Model m = f.to_model();
    for (int i = 0; i < 20; ++i) {
      const std::array<double, 2> x{d(rng), d(rng)};
      const auto y = f.forward(x);
      const Tensor s = m.raw_scores(Tensor::vector({x[0], x[1]}));
      EXPECT_NEAR(s[0], y[0], 1e-14);
      EXPECT_NEAR(s[1], y[1], 1e-14);
    }
  }
}

TEST(Predict, ArgmaxAndTies) {
  EXPECT_EQ(argmax(Tensor::vector({0.1, 0.5})), 1u);
  EXPECT_EQ(argmax(Tensor::vector({3, 3})), 0u);
  EXPECT_EQ(argmax(Tensor::vector({1, 0})), 0u);
}

TEST(Predict, InputShapeChecked) {
  const Model m = make_linear_model({3}, Tensor({2, 3}, 1.0));
  EXPECT_THROW(m.predict(Tensor::vector({1, 2})), Error);
  const auto p = m.predict(Tensor::vector({1, 2, 3}));
  EXPECT_EQ(p.scores, Tensor::vector({6, 6}));
  EXPECT_EQ(p.label, 0u);
}

TEST(Model, LayerNamesMustBeUnique) {
  std::vector<Layer> layers;
  layers.push_back({.name = "a", .kind = LayerKind::relu});
  layers.push_back({.name = "a", .kind = LayerKind::tanh});
  EXPECT_THROW(Model({2}, layers), Error);
}

TEST(Model, MiniConvNetLayout) {
  const Model m = make_mini_conv_net({}, 1);
  EXPECT_EQ(m.input_shape(), (Shape{3, 32, 32}));
  EXPECT_EQ(m.num_classes(), 2u);
  EXPECT_TRUE(m.find_layer("conv1"));
  EXPECT_TRUE(m.find_layer("conv2"));
  EXPECT_TRUE(m.find_layer("fc"));
  EXPECT_EQ(m.layers().back().kind, LayerKind::linear);  // raw scores, no output squashing
  std::mt19937_64 rng(2);
  const auto scores = m.raw_scores(fixtures::random_tensor({3, 32, 32}, rng, 0, 1));
  EXPECT_EQ(scores.shape(), (Shape{2}));
}

TEST(Model, SameSeedSameWeights) {
  const Model a = make_mini_conv_net({}, 9), b = make_mini_conv_net({}, 9), c = make_mini_conv_net({}, 10);
  EXPECT_EQ(a.layers()[0].weight, b.layers()[0].weight);
  EXPECT_NE(a.layers()[0].weight, c.layers()[0].weight);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Adam adam({.learning_rate = 0.1, .beta1 = 0.9, .beta2 = 0.999});
  Tensor p = Tensor::vector({1.0, -2.0});
  for (int i = 0; i < 10; ++i) adam.step(p, Tensor::zeros({2}));
  EXPECT_EQ(p, Tensor::vector({1.0, -2.0}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Adam adam({.learning_rate = 0.1, .beta1 = 0.9, .beta2 = 0.999});
  Tensor p = Tensor::scalar(0.0);
  adam.step(p, Tensor::scalar(1.0));
  // m_hat = 1, v_hat = 1 -> step = lr * 1 / (1 + eps)
  EXPECT_NEAR(p[0], -0.1, 1e-8);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, ConstantGradientDecreasesMonotonically) {
  Adam adam;
  Tensor p = Tensor::scalar(5.0);
  double prev = p[0];
  for (int i = 0; i < 200; ++i) {
    adam.step(p, Tensor::scalar(0.3));
    EXPECT_LT(p[0], prev);
    prev = p[0];
  }
}

TEST(Adam, ShapeMismatchRejected) {
  Adam adam;
  Tensor p = Tensor::vector({1, 2});
  EXPECT_THROW(adam.step(p, Tensor::vector({1, 2, 3})), Error);
}

namespace {

Dataset small_blobs(std::uint64_t seed, std::size_t n_train = 400, double label_noise = 0.0) {
  BlobSpec spec;
  spec.channels = 1;
  spec.height = spec.width = 12;
  spec.n_train = n_train;
  spec.n_val = 100;
  spec.n_test = 100;
  spec.seed = seed;
  spec.label_noise = label_noise;
  return make_blobs(spec);
}

MiniConvNetConfig small_net() {
  return {.channels = 1, .height = 12, .width = 12, .conv1_channels = 4, .conv2_channels = 8, .kernel = 3,
          .classes = 2};
}

}  // namespace

TEST(Train, ZeroIterationsIsANoOp) {
  const Dataset d = small_blobs(1);
  Model m = make_mini_conv_net(small_net(), 3);
  const Model before = m;
  TrainConfig cfg;
  cfg.max_iterations = 0;
  const TrainResult r = train(m, d, cfg);
  EXPECT_EQ(r.iterations, 0u);
  EXPECT_EQ(m.layers()[0].weight, before.layers()[0].weight);
  EXPECT_EQ(r.held_out.accuracy, evaluate(before, d.test).accuracy);
}

TEST(Train, EmptySplitsAndBadBatchRejected) {
  Dataset d = small_blobs(1);
  Model m = make_mini_conv_net(small_net(), 3);
  TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(train(m, d, cfg), Error);
  d.val.clear();
  EXPECT_THROW(train(m, d, TrainConfig{}), Error);
}

TEST(Train, SeparableBlobsReachHighAccuracy) {
  const Dataset d = small_blobs(4);
  Model m = make_mini_conv_net(small_net(), 5);
  TrainConfig cfg;
  cfg.target_val_accuracy = 0.99;
  cfg.min_iterations = 100;
  cfg.max_iterations = 3000;
  cfg.val_every = 50;
  cfg.seed = 6;
  const TrainResult r = train(m, d, cfg);
  EXPECT_TRUE(r.reached_target);
  EXPECT_GE(r.val_accuracy, 0.99);
  EXPECT_GT(r.held_out.accuracy, 0.9);
  // Loss trend: the last 50 iterations average below the first 50.
  ASSERT_GE(r.loss_history.size(), 100u);
  double head = 0, tail = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    head += r.loss_history[i];
    tail += r.loss_history[r.loss_history.size() - 1 - i];
  }
  EXPECT_LT(tail, head);
}

TEST(Train, UndertrainedVariantStopsInRange) {
  const Dataset d = small_blobs(4);
  Model m = make_mini_conv_net(small_net(), 5);
  TrainConfig cfg;
  cfg.target_val_accuracy = 0.8;
  cfg.min_iterations = 0;
  cfg.max_iterations = 3000;
  cfg.val_every = 1;
  cfg.seed = 6;
  const TrainResult r = train(m, d, cfg);
  ASSERT_TRUE(r.reached_target);
  EXPECT_GE(r.val_accuracy, 0.8);
  EXPECT_LT(r.val_accuracy, 1.0);
}

TEST(Train, LinearProbeSeparatesBlobs) {
  const Dataset d = small_blobs(12);
  Model m = make_linear_model(d.shape, Tensor({2, 144}, 0.0));
  TrainConfig cfg;
  cfg.min_iterations = 0;
  cfg.max_iterations = 1500;
  cfg.target_val_accuracy = 1.0;
  cfg.adam.learning_rate = 0.01;
  train(m, d, cfg);
  EXPECT_GT(evaluate(m, d.val).accuracy, 0.9);
}

TEST(Train, MetricsOnHandCase) {
  // Scores are x itself: predicted label = argmax(x).
  const Model m = make_linear_model({2}, Tensor({2, 2}, {1, 0, 0, 1}));
  std::vector<Sample> s = {
      {"a", Tensor::vector({1, 0}), 0},  // TN (class 1 positive)
      {"b", Tensor::vector({0, 1}), 1},  // TP
      {"c", Tensor::vector({0, 1}), 0},  // FP
      {"d", Tensor::vector({1, 0}), 1},  // FN
      {"e", Tensor::vector({0, 1}), 1},  // TP
  };
  const auto r = evaluate(m, s);
  EXPECT_DOUBLE_EQ(r.accuracy, 3.0 / 5.0);
  EXPECT_DOUBLE_EQ(r.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall, 2.0 / 3.0);
}

TEST(Dataset, BlobsAreDeterministicAndInUnitRange) {
  const Dataset a = small_blobs(21), b = small_blobs(21), c = small_blobs(22);
  ASSERT_EQ(a.train.size(), 400u);
  EXPECT_EQ(a.train[0].x, b.train[0].x);
  EXPECT_NE(a.train[0].x, c.train[0].x);
  for (const auto& s : a.train) {
    for (double v : s.x.data()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(Dataset, ChannelAffine) {
  const ChannelAffine aff{{0.5}, {0.25}};
  EXPECT_EQ(aff.apply(Tensor({1, 1, 2}, {0.5, 1.0})), Tensor({1, 1, 2}, {0.0, 2.0}));
}
