#include "heatax/gax.hpp"

#include <cmath>
#include <limits>

#include "heatax/adam.hpp"
#include "heatax/autodiff.hpp"
#include "heatax/error.hpp"

namespace heatax {

void GaxConfig::validate() const {
  if (!(epsilon > 0.0)) fail(ErrorCode::invalid_argument, "gax: epsilon must be > 0");
  if (!(similarity_factor >= 0.0)) fail(ErrorCode::invalid_argument, "gax: similarity factor must be >= 0");
  if (!std::isfinite(target_co)) fail(ErrorCode::invalid_argument, "gax: target co-score must be finite");
  if (!(learning_rate > 0.0)) fail(ErrorCode::invalid_argument, "gax: learning rate must be > 0");
  if (snapshot_every == 0) fail(ErrorCode::invalid_argument, "gax: snapshot-every must be positive");
}

namespace {

void check_unit_range(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::invalid_argument, "gax: input must lie in [0,1]");
  }
}

GaxLoss evaluate_loss(const Model& model, const Tensor& x, const Tensor& base_scores, const Tensor& inv_x_eps,
                      const Tensor& w, const Tensor* b, std::size_t truth, const GaxConfig& cfg) {
  Graph g;
  const Var xv = g.constant(x);
  const Var wv = g.input(w);
  Var z = g.mul(wv, xv);
  Var bv{};
  if (b != nullptr) {
    bv = g.input(*b);
    z = g.add(z, bv);
  }
  const Var h = g.tanh(z);
  const Var scores = model.forward(g, g.add(xv, h));
  const auto kappa = score_constants(base_scores.size(), truth);
  const Var co = g.dot(g.constant(Tensor(base_scores.shape(), kappa)), g.sub(scores, g.constant(base_scores)));
  const Var d = g.add_scalar(g.sub(h, xv), cfg.epsilon);
  const Var ratio = g.mul(g.mul(d, d), g.constant(inv_x_eps));
  const Var sim = g.scale(g.reciprocal(g.mean(ratio)), cfg.similarity_factor);
  const Var loss = g.sub(sim, co);
  g.backward(loss);

  GaxLoss out;
  out.loss = g.value(loss)[0];
  out.co = g.value(co)[0];
  out.similarity = g.value(sim)[0];
  out.h = g.value(h);
  out.grad_w = g.grad(wv);
  if (b != nullptr) out.grad_b = g.grad(bv);
  return out;
}

Tensor inverse_offset(const Tensor& x, double eps) {
  Tensor r = x;
  for (double& v : r.data()) v = 1.0 / (v + eps);
  return r;
}

void check_inputs(const Model& model, const Tensor& x, const Tensor& w, const Tensor* b, std::size_t truth) {
  if (x.shape() != model.input_shape()) {
    fail(ErrorCode::shape_mismatch, "gax: input shape " + shape_str(x.shape()) + " != model input " +
                                        shape_str(model.input_shape()));
  }
  require_same_shape(x, w, "gax weight");
  if (b != nullptr) require_same_shape(x, *b, "gax bias");
  if (truth >= model.num_classes()) fail(ErrorCode::invalid_argument, "gax: groundtruth out of range");
  check_unit_range(x);
}

}  // namespace

GaxLoss gax_loss(const Model& model, const Tensor& x, const Tensor& w, const Tensor* b, std::size_t truth,
                 const GaxConfig& cfg) {
  cfg.validate();
  check_inputs(model, x, w, b, truth);
  return evaluate_loss(model, x, model.raw_scores(x), inverse_offset(x, cfg.epsilon), w, b, truth, cfg);
}

GaxResult gax_run(const Model& model, const Tensor& x, std::size_t truth, const GaxConfig& cfg,
                  const SnapshotSink& sink, const std::string& sample_id) {
  cfg.validate();
  Tensor w(x.shape(), cfg.w_init);
  Tensor b;
  if (cfg.use_bias) b = Tensor(x.shape(), cfg.bias_init);
  const Tensor* bp = cfg.use_bias ? &b : nullptr;
  check_inputs(model, x, w, bp, truth);

  const Prediction pred = model.predict(x);
  if (!cfg.allow_incorrect && pred.label != truth) {
    fail(ErrorCode::invalid_argument, "gax: model misclassifies the sample");
  }

  const Tensor inv = inverse_offset(x, cfg.epsilon);
  Adam adam({.learning_rate = cfg.learning_rate, .beta1 = cfg.beta1, .beta2 = cfg.beta2});

  GaxResult result;
  GaxTrace& trace = result.trace;
  trace.sample_id = sample_id;
  auto closed_form_h = [&] {
    Tensor h = w * x;
    if (bp != nullptr) h += b;
    for (double& v : h.data()) v = std::tanh(v);
    return h;
  };
  result.heatmap = closed_form_h();
  if (cfg.max_iterations == 0) {
    trace.final_co = co_score(model, x, result.heatmap, truth, AxVariant::sum);
    return result;
  }

  std::size_t last_snapshot = static_cast<std::size_t>(-1);
  for (std::size_t step = 0; step < cfg.max_iterations; ++step) {
    GaxLoss l;
    try {
      l = evaluate_loss(model, x, pred.scores, inv, w, bp, truth, cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::numeric) throw;
      trace.aborted = true;
      trace.abort_reason = e.what();
      break;
    }
    if (!std::isfinite(l.loss)) {
      trace.aborted = true;
      trace.abort_reason = "non-finite loss";
      break;
    }
    trace.iterations.push_back({step, l.loss, l.co});
    result.heatmap = l.h;
    const bool done = l.co >= cfg.target_co;
    const bool last = done || step + 1 == cfg.max_iterations;
    if (sink && (step % cfg.snapshot_every == 0 || last)) {
      trace.snapshots.push_back({step, sink(step, l.h)});
      last_snapshot = step;
    }
    if (done) {
      trace.converged = true;
      break;
    }
    if (last) break;
    if (bp != nullptr) {
      Tensor* params[] = {&w, &b};
      const Tensor grads[] = {l.grad_w, l.grad_b};
      adam.step(params, grads);
    } else {
      adam.step(w, l.grad_w);
    }
  }
  if (trace.aborted && sink && !trace.iterations.empty() && last_snapshot != trace.iterations.back().step) {
    trace.snapshots.push_back({trace.iterations.back().step, sink(trace.iterations.back().step, result.heatmap)});
  }
  if (!trace.iterations.empty()) {
    trace.final_co = trace.iterations.back().co;
  } else {
    // aborted on the first evaluation: nothing finite to report
    trace.final_co = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

GaxSweepResult gax_sweep(const Model& model, std::span<const Sample> samples, const GaxConfig& cfg,
                         const SweepSnapshotSink& sink, ExecPolicy policy) {
  cfg.validate();
  struct Outcome {
    enum { run, skipped, failed } kind = run;
    GaxResult result;
    std::string message;
  };
  std::vector<Outcome> outcomes(samples.size());
  auto one = [&](std::size_t i) {
    const Sample& s = samples[i];
    Outcome& o = outcomes[i];
    try {
      if (model.predict(s.x).label != s.label && !cfg.allow_incorrect) {
        o.kind = Outcome::skipped;
        return;
      }
      SnapshotSink per_sample;
      if (sink) per_sample = [&](std::size_t step, const Tensor& h) { return sink(s.id, step, h); };
      o.result = gax_run(model, s.x, s.label, cfg, per_sample, s.id);
    } catch (const std::exception& e) {
      o.kind = Outcome::failed;
      o.message = e.what();
    }
  };
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) one(static_cast<std::size_t>(i));
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) one(static_cast<std::size_t>(i));
  }
  GaxSweepResult out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& o = outcomes[i];
    switch (o.kind) {
      case Outcome::run: out.runs.push_back(std::move(o.result)); break;
      case Outcome::skipped: out.skipped.push_back(samples[i].id); break;
      case Outcome::failed: out.failures.push_back({samples[i].id, "gax", o.message}); break;
    }
  }
  return out;
}

}  // namespace heatax
