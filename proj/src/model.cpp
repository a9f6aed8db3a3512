#include "heatax/model.hpp"

#include <cmath>
#include <set>

#include "heatax/error.hpp"

namespace heatax {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::max_pool: return "max_pool";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::relu: return "relu";
    case LayerKind::leaky_relu: return "leaky_relu";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::tanh: return "tanh";
    case LayerKind::flatten: return "flatten";
    case LayerKind::linear: return "linear";
  }
  return "unknown";
}

std::size_t argmax(const Tensor& scores) {
  if (scores.empty()) fail(ErrorCode::invalid_argument, "argmax: empty scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

Model::Model(Shape input_shape, std::vector<Layer> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  if (layers_.empty()) fail(ErrorCode::invalid_argument, "model: no layers");
  std::set<std::string> names;
  for (const auto& l : layers_) {
    if (l.name.empty()) fail(ErrorCode::invalid_argument, "model: layer with empty name");
    if (!names.insert(l.name).second) fail(ErrorCode::invalid_argument, "model: duplicate layer name '" + l.name + "'");
    if (l.kind == LayerKind::conv2d) {
      if (l.weight.rank() != 4 || l.bias.rank() != 1 || l.bias.dim(0) != l.weight.dim(0)) {
        fail(ErrorCode::shape_mismatch, "model: conv2d layer '" + l.name + "' has weight " +
                                            shape_str(l.weight.shape()) + " bias " + shape_str(l.bias.shape()));
      }
    }
    if (l.kind == LayerKind::linear) {
      if (l.weight.rank() != 2 || l.bias.rank() != 1 || l.bias.dim(0) != l.weight.dim(0)) {
        fail(ErrorCode::shape_mismatch, "model: linear layer '" + l.name + "' has weight " +
                                            shape_str(l.weight.shape()) + " bias " + shape_str(l.bias.shape()));
      }
    }
  }
  // Shape inference by running once on zeros; op errors name the mismatch.
  Graph g;
  const Var out = forward(g, g.constant(Tensor::zeros(input_shape_)));
  output_shape_ = g.value(out).shape();
  if (output_shape_.size() != 1 || output_shape_[0] < 1) {
    fail(ErrorCode::shape_mismatch, "model: output must be a vector of raw class scores, got " + shape_str(output_shape_));
  }
}

std::optional<std::size_t> Model::find_layer(std::string_view name) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].name == name) return i;
  }
  return std::nullopt;
}

void Model::check_input(const Tensor& x) const {
  if (x.shape() != input_shape_) {
    fail(ErrorCode::shape_mismatch, "model: input " + shape_str(x.shape()) + " but model expects " + shape_str(input_shape_));
  }
}

Var Model::forward(Graph& graph, Var x, ForwardRecord* record, bool trainable) const {
  if (graph.value(x).shape() != input_shape_) {
    fail(ErrorCode::shape_mismatch,
         "model: input " + shape_str(graph.value(x).shape()) + " but model expects " + shape_str(input_shape_));
  }
  Var h = x;
  for (const auto& l : layers_) {
    switch (l.kind) {
      case LayerKind::conv2d: {
        const Var w = graph.input(l.weight, trainable);
        const Var b = graph.input(l.bias, trainable);
        if (record) {
          record->parameters.push_back(w);
          record->parameters.push_back(b);
        }
        h = graph.bias_add(graph.conv2d(h, w, l.stride, l.pad), b);
        break;
      }
      case LayerKind::linear: {
        const Var w = graph.input(l.weight, trainable);
        const Var b = graph.input(l.bias, trainable);
        if (record) {
          record->parameters.push_back(w);
          record->parameters.push_back(b);
        }
        if (graph.value(h).rank() != 1) h = graph.flatten(h);
        h = graph.bias_add(graph.matmul(w, h), b);
        break;
      }
      case LayerKind::max_pool: h = graph.max_pool(h, l.size, l.stride); break;
      case LayerKind::global_avg_pool: h = graph.global_avg_pool(h); break;
      case LayerKind::relu: h = graph.relu(h); break;
      case LayerKind::leaky_relu: h = graph.leaky_relu(h, l.slope); break;
      case LayerKind::sigmoid: h = graph.sigmoid(h); break;
      case LayerKind::tanh: h = graph.tanh(h); break;
      case LayerKind::flatten: h = graph.flatten(h); break;
    }
    if (record) record->layer_outputs.push_back(h);
  }
  return h;
}

Tensor Model::raw_scores(const Tensor& x) const {
  check_input(x);
  Graph g;
  return g.value(forward(g, g.constant(x)));
}

Prediction Model::predict(const Tensor& x) const {
  Prediction p;
  p.scores = raw_scores(x);
  p.label = argmax(p.scores);
  return p;
}

std::vector<Tensor*> Model::parameters() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    if (l.has_parameters()) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
  }
  return out;
}

std::vector<const Tensor*> Model::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers_) {
    if (l.has_parameters()) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
  }
  return out;
}

void Model::round_parameters_to_float32() {
  for (Tensor* p : parameters()) *p = round_to_float32(*p);
  for (auto& l : layers_) l.slope = static_cast<double>(static_cast<float>(l.slope));
}

namespace {

Tensor he_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace

Model make_mini_conv_net(const MiniConvNetConfig& cfg, std::uint64_t seed) {
  if (cfg.classes < 2) fail(ErrorCode::invalid_argument, "mini conv net: need at least 2 classes");
  if (cfg.height < 4 || cfg.width < 4) fail(ErrorCode::invalid_argument, "mini conv net: input must be at least 4x4");
  std::mt19937_64 rng(seed);
  const std::size_t k = cfg.kernel, pad = k / 2;

  Layer conv1{.name = "conv1", .kind = LayerKind::conv2d, .stride = 1, .pad = pad};
  conv1.weight = he_uniform({cfg.conv1_channels, cfg.channels, k, k}, cfg.channels * k * k, rng);
  conv1.bias = Tensor::zeros({cfg.conv1_channels});

  Layer conv2{.name = "conv2", .kind = LayerKind::conv2d, .stride = 1, .pad = pad};
  conv2.weight = he_uniform({cfg.conv2_channels, cfg.conv1_channels, k, k}, cfg.conv1_channels * k * k, rng);
  conv2.bias = Tensor::zeros({cfg.conv2_channels});

  const std::size_t features = cfg.conv2_channels * (cfg.height / 2 / 2) * (cfg.width / 2 / 2);
  Layer fc{.name = "fc", .kind = LayerKind::linear};
  fc.weight = he_uniform({cfg.classes, features}, features, rng);
  fc.bias = Tensor::zeros({cfg.classes});

  std::vector<Layer> layers;
  layers.push_back(std::move(conv1));
  layers.push_back({.name = "relu1", .kind = LayerKind::relu});
  layers.push_back({.name = "pool1", .kind = LayerKind::max_pool, .stride = 2, .size = 2});
  layers.push_back(std::move(conv2));
  layers.push_back({.name = "relu2", .kind = LayerKind::relu});
  layers.push_back({.name = "pool2", .kind = LayerKind::max_pool, .stride = 2, .size = 2});
  layers.push_back({.name = "flatten", .kind = LayerKind::flatten});
  layers.push_back(std::move(fc));
  return Model({cfg.channels, cfg.height, cfg.width}, std::move(layers));
}

Model make_linear_model(const Shape& input_shape, Tensor weight, std::optional<Tensor> bias) {
  if (weight.rank() != 2) fail(ErrorCode::shape_mismatch, "linear model: weight must be rank 2");
  Layer fc{.name = "fc", .kind = LayerKind::linear};
  fc.bias = bias ? *bias : Tensor::zeros({weight.dim(0)});
  fc.weight = std::move(weight);
  std::vector<Layer> layers;
  if (input_shape.size() != 1) layers.push_back({.name = "flatten", .kind = LayerKind::flatten});
  layers.push_back(std::move(fc));
  return Model(input_shape, std::move(layers));
}

}  // namespace heatax
