#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "heatax/error.hpp"
#include "heatax/gax.hpp"

using namespace heatax;

namespace {

Model tiny_conv(std::uint64_t seed) {
  return make_mini_conv_net({.channels = 1, .height = 6, .width = 6, .conv1_channels = 2, .conv2_channels = 2,
                             .kernel = 3, .classes = 2},
                            seed);
}

}  // namespace

TEST(GaxLoss, SinglePixelHandEvaluated) {
  const Model m = make_linear_model({1}, Tensor({2, 1}, {1.0, -1.0}));
  GaxConfig cfg;
  const Tensor x = Tensor::vector({0.5});
  const GaxLoss l = gax_loss(m, x, Tensor::vector({0.0}), nullptr, 0, cfg);
  EXPECT_EQ(l.h, Tensor::vector({0.0}));
  const double d = 0.0 - 0.5 + 1e-4;
  const double sim = 100.0 / (d * d / (0.5 + 1e-4));
  EXPECT_NEAR(l.similarity, sim, 1e-12 * sim);
  EXPECT_EQ(l.co, 0.0);
  EXPECT_NEAR(l.loss, sim, 1e-12 * sim);
}

TEST(GaxLoss, UnitWeightSimilarityIsFinitePositive) {
  std::mt19937_64 rng(1);
  const Model m = tiny_conv(2);
  const Tensor x = fixtures::random_tensor({1, 6, 6}, rng, 0.05, 1.0);
  GaxConfig cfg;
  const GaxLoss l = gax_loss(m, x, Tensor::ones(x.shape()), nullptr, 0, cfg);
  double mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = std::tanh(x[i]) - x[i] + cfg.epsilon;
    mean += d * d / (x[i] + cfg.epsilon);
  }
  mean /= static_cast<double>(x.size());
  EXPECT_GT(l.similarity, 0.0);
  EXPECT_TRUE(std::isfinite(l.similarity));
  EXPECT_NEAR(l.similarity, cfg.similarity_factor / mean, 1e-9 * l.similarity);
  EXPECT_NEAR(l.loss, l.similarity - l.co, 1e-9 * std::abs(l.loss));
}

TEST(GaxLoss, SimilarityPositiveOnUnitRange) {
  std::mt19937_64 rng(2);
  const Model m = tiny_conv(3);
  for (int i = 0; i < 50; ++i) {
    const Tensor x = fixtures::random_tensor({1, 6, 6}, rng, 0, 1);
    const Tensor w = fixtures::random_tensor({1, 6, 6}, rng, -3, 3);
    const Tensor b = fixtures::random_tensor({1, 6, 6}, rng, -1, 1);
    EXPECT_GT(gax_loss(m, x, w, &b, 1, GaxConfig{}).similarity, 0.0);
  }
}

TEST(GaxLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  const Model m = tiny_conv(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor x = fixtures::random_tensor({1, 6, 6}, rng, 0.05, 1.0);
    Tensor w = fixtures::random_tensor({1, 6, 6}, rng, 0.5, 1.5);
    Tensor b = fixtures::random_tensor({1, 6, 6}, rng, -0.1, 0.1);
    GaxConfig cfg;
    const GaxLoss l = gax_loss(m, x, w, &b, trial % 2, cfg);
    const double h = 1e-6;
    double diff2 = 0, a2 = 0, n2 = 0;
    for (Tensor* p : {&w, &b}) {
      const Tensor& analytic = p == &w ? l.grad_w : l.grad_b;
      for (std::size_t i = 0; i < p->size(); ++i) {
        const double keep = (*p)[i];
        (*p)[i] = keep + h;
        const double up = gax_loss(m, x, w, &b, trial % 2, cfg).loss;
        (*p)[i] = keep - h;
        const double down = gax_loss(m, x, w, &b, trial % 2, cfg).loss;
        (*p)[i] = keep;
        const double numeric = (up - down) / (2 * h);
        diff2 += (numeric - analytic[i]) * (numeric - analytic[i]);
        a2 += analytic[i] * analytic[i];
        n2 += numeric * numeric;
      }
    }
    EXPECT_LT(std::sqrt(diff2 / std::max(a2, n2)), 1e-5) << trial;
  }
}

TEST(GaxLoss, Preconditions) {
  const Model m = make_linear_model({2}, Tensor({2, 2}, {1, 0, 0, 1}));
  const GaxConfig cfg;
  EXPECT_THROW(gax_loss(m, Tensor::vector({1.2, 0.1}), Tensor::ones({2}), nullptr, 0, cfg), Error);
  EXPECT_THROW(gax_loss(m, Tensor::vector({-0.1, 0.1}), Tensor::ones({2}), nullptr, 0, cfg), Error);
  EXPECT_THROW(gax_loss(m, Tensor::vector({0.5, 0.1}), Tensor::ones({3}), nullptr, 0, cfg), Error);
  GaxConfig bad;
  bad.epsilon = 0;
  EXPECT_THROW(gax_loss(m, Tensor::vector({0.5, 0.1}), Tensor::ones({2}), nullptr, 0, bad), Error);
  bad = {};
  bad.similarity_factor = -1;
  EXPECT_THROW(bad.validate(), Error);
  bad = {};
  bad.target_co = std::nan("");
  EXPECT_THROW(bad.validate(), Error);
}

TEST(GaxRun, TrivialTargetConvergesImmediately) {
  const Model m = make_linear_model({2}, Tensor({2, 2}, {1, 0, 0, 1}));
  GaxConfig cfg;
  cfg.target_co = 0.0;
  const Tensor x = Tensor::vector({0.9, 0.1});
  const GaxResult r = gax_run(m, x, 0, cfg);
  EXPECT_TRUE(r.trace.converged);
  EXPECT_LE(r.trace.iterations.back().step, 1u);
  EXPECT_GE(r.trace.final_co, 0.0);
}

TEST(GaxRun, ZeroIterations) {
  const Model m = make_linear_model({2}, Tensor({2, 2}, {1, 0, 0, 1}));
  GaxConfig cfg;
  cfg.max_iterations = 0;
  const Tensor x = Tensor::vector({0.9, 0.1});
  const GaxResult r = gax_run(m, x, 0, cfg);
  EXPECT_FALSE(r.trace.converged);
  EXPECT_TRUE(r.trace.iterations.empty());
  const double initial = std::tanh(0.9) - std::tanh(0.1);
  EXPECT_NEAR(r.trace.final_co, initial, 1e-15);
}

TEST(GaxRun, MisclassifiedSampleRejectedUnlessAllowed) {
  const Model m = make_linear_model({2}, Tensor({2, 2}, {1, 0, 0, 1}));
  GaxConfig cfg;
  cfg.max_iterations = 3;
  EXPECT_THROW(gax_run(m, Tensor::vector({0.9, 0.1}), 1, cfg), Error);
  cfg.allow_incorrect = true;
  EXPECT_NO_THROW(gax_run(m, Tensor::vector({0.9, 0.1}), 1, cfg));
}

TEST(GaxRun, TraceInvariantsAndSnapshots) {
  std::mt19937_64 rng(5);
  const Model m = tiny_conv(6);
  const Tensor x = fixtures::random_tensor({1, 6, 6}, rng, 0, 1);
  const std::size_t truth = m.predict(x).label;
  for (double target : {0.5, 1e9}) {
    GaxConfig cfg;
    cfg.target_co = target;
    cfg.max_iterations = 25;
    cfg.snapshot_every = 10;
    cfg.use_bias = true;
    std::vector<std::size_t> steps;
    const SnapshotSink sink = [&](std::size_t step, const Tensor& h) {
      for (double v : h.data()) {
        EXPECT_GE(v, -1.0);
        EXPECT_LE(v, 1.0);
      }
      steps.push_back(step);
      return "s" + std::to_string(step);
    };
    const GaxResult r = gax_run(m, x, truth, cfg, sink, "id");
    const auto& t = r.trace;
    ASSERT_FALSE(t.iterations.empty());
    EXPECT_EQ(t.converged, t.iterations.back().co >= cfg.target_co);
    EXPECT_EQ(t.final_co, t.iterations.back().co);
    EXPECT_EQ(t.sample_id, "id");
    for (std::size_t i = 0; i < t.iterations.size(); ++i) EXPECT_EQ(t.iterations[i].step, i);
    ASSERT_FALSE(steps.empty());
    EXPECT_EQ(steps.front(), 0u);
    EXPECT_EQ(steps.back(), t.iterations.back().step);
    EXPECT_EQ(t.snapshots.size(), steps.size());
    if (!t.converged) {
      EXPECT_EQ(t.iterations.size(), 25u);
      EXPECT_EQ(steps, (std::vector<std::size_t>{0, 10, 20, 24}));
    }
    for (double v : r.heatmap.data()) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(GaxRun, DescentDirectionRaisesCo) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Model m = make_linear_model({4}, fixtures::random_tensor({3, 4}, rng));
    const Tensor x = fixtures::random_tensor({4}, rng, 0.05, 1.0);
    GaxConfig cfg;
    cfg.similarity_factor = 0.0;
    cfg.learning_rate = 1e-4;
    cfg.max_iterations = 2;
    cfg.target_co = 1e9;
    const GaxResult r = gax_run(m, x, m.predict(x).label, cfg);
    ASSERT_EQ(r.trace.iterations.size(), 2u);
    EXPECT_GT(r.trace.iterations[1].co, r.trace.iterations[0].co);
  }
}

TEST(GaxRun, NonFiniteLossAbortsAndKeepsTrace) {
  const Model m = make_linear_model({1}, Tensor({2, 1}, {1.7e308, -1.7e308}));
  GaxConfig cfg;
  cfg.allow_incorrect = true;
  GaxResult r;
  ASSERT_NO_THROW(r = gax_run(m, Tensor::vector({1.0}), 0, cfg));
  EXPECT_TRUE(r.trace.aborted);
  EXPECT_FALSE(r.trace.converged);
  EXPECT_FALSE(r.trace.abort_reason.empty());
}

TEST(GaxSweep, EmptyAndExclusion) {
  const Model m = make_linear_model({2}, Tensor({2, 2}, {1, 0, 0, 1}));
  GaxConfig cfg;
  cfg.max_iterations = 5;
  EXPECT_TRUE(gax_sweep(m, {}, cfg).runs.empty());
  std::vector<Sample> samples;
  for (int i = 0; i < 10; ++i) {
    const double a = 0.07 + 0.09 * i;
    samples.push_back({"s" + std::to_string(i), Tensor::vector({a, 1.0 - a}), a < 0.5 ? 1u : 0u});
  }
  samples[3].label = 1 - samples[3].label;
  const auto r = gax_sweep(m, samples, cfg);
  EXPECT_EQ(r.runs.size(), 9u);
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0], "s3");
  const auto rs = gax_sweep(m, samples, cfg, {}, ExecPolicy::serial);
  ASSERT_EQ(rs.runs.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(rs.runs[i].trace.sample_id, r.runs[i].trace.sample_id);
    EXPECT_EQ(rs.runs[i].trace.final_co, r.runs[i].trace.final_co);
  }
}
