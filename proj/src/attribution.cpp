#include "heatax/attribution.hpp"

#include <cmath>

#include "heatax/error.hpp"

namespace heatax {

std::string MethodTag::str() const {
  switch (method) {
    case Method::saliency: return "saliency";
    case Method::input_x_gradient: return "input-x-gradient";
    case Method::layer_gradcam: return "layer-gradcam:" + layer;
    case Method::deconvolution: return "deconvolution";
    case Method::guided_backprop: return "guided-backprop";
    case Method::deeplift: return "deeplift";
  }
  return "unknown";
}

MethodTag MethodTag::parse(std::string_view text) {
  if (text == "saliency") return {Method::saliency, {}};
  if (text == "input-x-gradient") return {Method::input_x_gradient, {}};
  if (text == "deconvolution") return {Method::deconvolution, {}};
  if (text == "guided-backprop") return {Method::guided_backprop, {}};
  if (text == "deeplift") return {Method::deeplift, {}};
  if (text == "layer-gradcam") return {Method::layer_gradcam, "conv1"};
  constexpr std::string_view prefix = "layer-gradcam:";
  if (text.substr(0, prefix.size()) == prefix && text.size() > prefix.size()) {
    return {Method::layer_gradcam, std::string(text.substr(prefix.size()))};
  }
  fail(ErrorCode::invalid_argument, "unknown attribution method '" + std::string(text) + "'");
}

std::vector<MethodTag> all_methods(const std::string& gradcam_layer) {
  return {{Method::saliency, {}},      {Method::input_x_gradient, {}},
          {Method::layer_gradcam, gradcam_layer}, {Method::deconvolution, {}},
          {Method::guided_backprop, {}}, {Method::deeplift, {}}};
}

namespace {

Tensor one_hot(std::size_t n, std::size_t index) {
  Tensor t({n});
  t[index] = 1.0;
  return t;
}

Tensor input_gradient(const Model& model, const Tensor& x, std::size_t target, BackwardRule rule) {
  Graph g;
  const Var in = g.input(x);
  const Var out = model.forward(g, in);
  g.backward(out, one_hot(g.value(out).size(), target), rule);
  return g.grad(in);
}

Tensor deeplift(const Model& model, const Tensor& x, std::size_t target, const Tensor& baseline) {
  const Tensor base = baseline.empty() ? Tensor::zeros(x.shape()) : baseline;
  require_same_shape(x, base, "deeplift baseline");
  Graph ref;
  model.forward(ref, ref.input(base));
  Graph g;
  const Var in = g.input(x);
  const Var out = model.forward(g, in);
  g.backward(out, one_hot(g.value(out).size(), target), BackwardRule::rescale, &ref);
  return (x - base) * g.grad(in);
}

Tensor gradcam(const Model& model, const Tensor& x, std::size_t target, const std::string& layer) {
  const auto index = model.find_layer(layer);
  if (!index) fail(ErrorCode::invalid_argument, "layer-gradcam: model has no layer named '" + layer + "'");
  if (x.rank() != 3) fail(ErrorCode::shape_mismatch, "layer-gradcam: input must be (C,H,W), got " + shape_str(x.shape()));
  Graph g;
  ForwardRecord rec;
  const Var out = model.forward(g, g.input(x), &rec);
  g.backward(out, one_hot(g.value(out).size(), target));
  const Var act_var = rec.layer_outputs[*index];
  const Tensor& act = g.value(act_var);
  const Tensor& grad = g.grad(act_var);
  if (act.rank() != 3) {
    fail(ErrorCode::shape_mismatch, "layer-gradcam: layer '" + layer + "' output " + shape_str(act.shape()) + " is not spatial");
  }
  const std::size_t K = act.dim(0), h = act.dim(1), w = act.dim(2), plane = h * w;
  Tensor cam({h, w});
  for (std::size_t k = 0; k < K; ++k) {
    double alpha = 0.0;
    for (std::size_t i = 0; i < plane; ++i) alpha += grad[k * plane + i];
    alpha /= static_cast<double>(plane);
    for (std::size_t i = 0; i < plane; ++i) cam[i] += alpha * act[k * plane + i];
  }
  for (double& v : cam.data()) v = v > 0 ? v : 0.0;

  // nearest-neighbour upsampling, replicated over the input channels
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  Tensor out_map(x.shape());
  for (std::size_t y = 0; y < H; ++y) {
    const std::size_t sy = y * h / H;
    for (std::size_t xx = 0; xx < W; ++xx) {
      const double v = cam[sy * w + xx * w / W];
      for (std::size_t c = 0; c < C; ++c) out_map.at(c, y, xx) = v;
    }
  }
  return out_map;
}

}  // namespace

Heatmap attribute(const Model& model, const Tensor& x, std::size_t target, const MethodTag& method,
                  const AttributionOptions& opts) {
  if (x.shape() != model.input_shape()) {
    fail(ErrorCode::shape_mismatch, "attribute: input " + shape_str(x.shape()) + " but model expects " +
                                        shape_str(model.input_shape()));
  }
  if (target >= model.num_classes()) {
    fail(ErrorCode::invalid_argument, "attribute: target " + std::to_string(target) + " out of range [0, " +
                                          std::to_string(model.num_classes()) + ")");
  }
  Heatmap h;
  h.method = method;
  h.target = target;
  switch (method.method) {
    case Method::saliency:
      h.values = input_gradient(model, x, target, BackwardRule::standard);
      if (opts.saliency_abs) {
        for (double& v : h.values.data()) v = std::abs(v);
      }
      break;
    case Method::input_x_gradient:
      h.values = x * input_gradient(model, x, target, BackwardRule::standard);
      break;
    case Method::deconvolution:
      h.values = input_gradient(model, x, target, BackwardRule::deconv_relu);
      break;
    case Method::guided_backprop:
      h.values = input_gradient(model, x, target, BackwardRule::guided_relu);
      break;
    case Method::deeplift:
      h.values = deeplift(model, x, target, opts.baseline);
      break;
    case Method::layer_gradcam:
      h.values = gradcam(model, x, target, method.layer);
      break;
  }
  return h;
}

Heatmap normalize(Heatmap h) {
  const double m = h.values.max_abs();
  if (m > 0.0) {
    for (double& v : h.values.data()) v /= m;
  }
  h.normalized = true;
  return h;
}

Heatmap attribute_at_predicted(const Model& model, const Tensor& x, const MethodTag& method,
                               const AttributionOptions& opts) {
  const std::size_t predicted = model.predict(x).label;
  return normalize(attribute(model, x, predicted, method, opts));
}

}  // namespace heatax
