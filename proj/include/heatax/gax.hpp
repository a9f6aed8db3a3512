#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "heatax/ax.hpp"
#include "heatax/dataset.hpp"
#include "heatax/model.hpp"

namespace heatax {

struct GaxConfig {
  double target_co = 5.0;
  std::size_t max_iterations = 500;
  double learning_rate = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double similarity_factor = 100.0;  // l_s
  double epsilon = 1e-4;
  bool use_bias = false;
  double bias_init = 0.01;
  double w_init = 1.0;
  std::size_t snapshot_every = 10;
  bool allow_incorrect = false;  // run even when the model misclassifies x

  void validate() const;
};

struct GaxLoss {
  double loss = 0.0;
  double co = 0.0;
  double similarity = 0.0;  // l_s / mean((h - x + eps)^2 / (x + eps))
  Tensor h;                 // tanh(w * x + b)
  Tensor grad_w, grad_b;    // grad_b is empty without bias
};

/// loss = -co(x, h, sum) + similarity. `b` may be null. x must lie in [0,1].
GaxLoss gax_loss(const Model& model, const Tensor& x, const Tensor& w, const Tensor* b, std::size_t truth,
                 const GaxConfig& cfg);

struct GaxStep {
  std::size_t step = 0;
  double loss = 0.0;
  double co = 0.0;
};

struct GaxSnapshot {
  std::size_t step = 0;
  std::string ref;  // whatever the snapshot sink returned, typically a file path
};

struct GaxTrace {
  std::string sample_id;
  std::vector<GaxStep> iterations;
  std::vector<GaxSnapshot> snapshots;
  bool converged = false;
  double final_co = 0.0;  // NaN when aborted before the first finite evaluation
  bool aborted = false;
  std::string abort_reason;
};

/// Receives (step, heatmap) and returns a reference to the stored snapshot.
using SnapshotSink = std::function<std::string(std::size_t step, const Tensor& h)>;

struct GaxResult {
  GaxTrace trace;
  Tensor heatmap;  // h at the last evaluated step
};

/// Adam on (w, b) from w = w_init, b = bias_init. Step s evaluates the loss,
/// records it, stops once co >= target, otherwise takes one Adam step.
/// Snapshots are taken at step 0, every `snapshot_every` steps and at the
/// last step. A non-finite loss ends the run with `aborted` set.
GaxResult gax_run(const Model& model, const Tensor& x, std::size_t truth, const GaxConfig& cfg,
                  const SnapshotSink& sink = {}, const std::string& sample_id = {});

using SweepSnapshotSink = std::function<std::string(const std::string& sample_id, std::size_t step, const Tensor& h)>;

struct GaxSweepResult {
  std::vector<GaxResult> runs;  // in sample order, correctly classified samples only
  std::vector<std::string> skipped;  // misclassified sample ids
  std::vector<SweepFailure> failures;
};

/// gax_run over every correctly classified sample. The sink may be called
/// concurrently from different samples.
GaxSweepResult gax_sweep(const Model& model, std::span<const Sample> samples, const GaxConfig& cfg,
                         const SweepSnapshotSink& sink = {}, ExecPolicy policy = ExecPolicy::parallel);

}  // namespace heatax
