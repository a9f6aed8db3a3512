#include "heatax/train.hpp"

#include <cmath>
#include <random>
#include <string>

#include "heatax/error.hpp"

namespace heatax {

ClassificationMetrics evaluate(const Model& model, std::span<const Sample> samples) {
  ClassificationMetrics m;
  m.count = samples.size();
  if (samples.empty()) return m;
  const std::size_t C = model.num_classes();
  std::vector<std::size_t> predicted(samples.size());
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) predicted[i] = model.predict(samples[i].x).label;

  std::vector<std::size_t> tp(C, 0), fp(C, 0), fn(C, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t truth = samples[i].label, pred = predicted[i];
    if (pred == truth) {
      ++correct;
      ++tp[truth];
    } else {
      ++fp[pred];
      ++fn[truth];
    }
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  if (C == 2) {
    m.precision = ratio(tp[1], tp[1] + fp[1]);
    m.recall = ratio(tp[1], tp[1] + fn[1]);
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      m.precision += ratio(tp[c], tp[c] + fp[c]);
      m.recall += ratio(tp[c], tp[c] + fn[c]);
    }
    m.precision /= static_cast<double>(C);
    m.recall /= static_cast<double>(C);
  }
  return m;
}

TrainResult train(Model& model, const Dataset& data, const TrainConfig& cfg) {
  if (data.train.empty()) fail(ErrorCode::invalid_argument, "train: empty train split");
  if (data.val.empty()) fail(ErrorCode::invalid_argument, "train: empty val split");
  if (cfg.batch_size == 0) fail(ErrorCode::invalid_argument, "train: batch size must be at least 1");
  if (cfg.val_every == 0) fail(ErrorCode::invalid_argument, "train: val_every must be at least 1");
  for (const auto& s : data.train) {
    if (s.label >= model.num_classes()) fail(ErrorCode::invalid_argument, "train: label out of range in " + s.id);
  }

  TrainResult result;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.train.size() - 1);
  Adam adam(cfg.adam);
  const std::vector<Tensor*> params = model.parameters();

  std::vector<std::size_t> batch(cfg.batch_size);
  std::vector<std::vector<Tensor>> sample_grads(cfg.batch_size);
  std::vector<double> sample_loss(cfg.batch_size);
  std::vector<std::string> sample_error(cfg.batch_size);

  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    for (auto& b : batch) b = pick(rng);
    const auto nb = static_cast<std::ptrdiff_t>(cfg.batch_size);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t bi = 0; bi < nb; ++bi) {
      try {
        const Sample& s = data.train[batch[bi]];
        Graph g;
        ForwardRecord rec;
        const Var out = model.forward(g, g.constant(s.x), &rec, true);
        const Var loss = g.softmax_cross_entropy(out, s.label);
        g.backward(loss);
        sample_loss[bi] = g.value(loss)[0];
        auto& grads = sample_grads[bi];
        grads.clear();
        for (Var p : rec.parameters) grads.push_back(g.grad(p));
      } catch (const std::exception& e) {
        sample_error[bi] = e.what();
      }
    }
    double loss = 0.0;
    for (std::size_t bi = 0; bi < cfg.batch_size; ++bi) {
      if (!sample_error[bi].empty()) {
        fail(ErrorCode::numeric, "train: iteration " + std::to_string(it) + ": " + sample_error[bi]);
      }
      loss += sample_loss[bi];
    }
    loss /= static_cast<double>(cfg.batch_size);
    if (!std::isfinite(loss)) fail(ErrorCode::numeric, "train: non-finite loss at iteration " + std::to_string(it));

    std::vector<Tensor> grads = std::move(sample_grads[0]);
    for (std::size_t bi = 1; bi < cfg.batch_size; ++bi) {
      for (std::size_t p = 0; p < grads.size(); ++p) grads[p] += sample_grads[bi][p];
    }
    for (auto& g : grads) g *= 1.0 / static_cast<double>(cfg.batch_size);
    adam.step(params, grads);
    result.loss_history.push_back(loss);
    result.iterations = it + 1;

    if (result.iterations % cfg.val_every == 0) {
      result.val_accuracy = evaluate(model, data.val).accuracy;
      result.val_history.emplace_back(result.iterations, result.val_accuracy);
      if (result.iterations >= cfg.min_iterations && result.val_accuracy >= cfg.target_val_accuracy) {
        result.reached_target = true;
        break;
      }
    }
  }
  if (result.val_history.empty() || result.val_history.back().first != result.iterations) {
    result.val_accuracy = evaluate(model, data.val).accuracy;
    result.val_history.emplace_back(result.iterations, result.val_accuracy);
  }
  result.held_out = evaluate(model, data.test.empty() ? data.val : data.test);
  return result;
}

}  // namespace heatax
