#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "heatax/adam.hpp"
#include "heatax/dataset.hpp"
#include "heatax/model.hpp"

namespace heatax {

/// Accuracy plus precision/recall. Binary problems use class 1 as the positive
/// class; with more classes precision and recall are macro-averaged.
struct ClassificationMetrics {
  std::size_t count = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

ClassificationMetrics evaluate(const Model& model, std::span<const Sample> samples);

struct TrainConfig {
  double target_val_accuracy = 0.99;
  std::size_t max_iterations = 240000;
  std::size_t min_iterations = 2400;  // early stop is only considered after this many
  std::size_t val_every = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  AdamConfig adam{.learning_rate = 0.001, .beta1 = 0.5, .beta2 = 0.999};
};

struct TrainResult {
  std::size_t iterations = 0;
  bool reached_target = false;
  double val_accuracy = 0.0;          // at the last validation check
  ClassificationMetrics held_out;     // test split, or val when test is empty
  std::vector<double> loss_history;   // mean batch loss per iteration
  std::vector<std::pair<std::size_t, double>> val_history;
};

/// Minibatch Adam on softmax cross-entropy over the raw scores. Each
/// iteration draws `batch_size` training samples uniformly with replacement;
/// per-sample gradients are computed in parallel and summed in sample order.
TrainResult train(Model& model, const Dataset& data, const TrainConfig& cfg);

}  // namespace heatax
