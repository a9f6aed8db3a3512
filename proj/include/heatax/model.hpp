#pragma once

#include <cstdint>
#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "heatax/autodiff.hpp"
#include "heatax/tensor.hpp"

namespace heatax {

enum class LayerKind : std::uint8_t {
  conv2d = 1,
  max_pool = 2,
  global_avg_pool = 3,
  relu = 4,
  leaky_relu = 5,
  sigmoid = 6,
  tanh = 7,
  flatten = 8,
  linear = 9,
};

std::string_view to_string(LayerKind kind);

struct Layer {
  std::string name;
  LayerKind kind = LayerKind::relu;
  std::size_t stride = 1;  // conv2d, max_pool
  std::size_t pad = 0;     // conv2d
  std::size_t size = 2;    // max_pool window
  double slope = 0.01;     // leaky_relu
  Tensor weight;           // conv2d (O,C,kh,kw) / linear (out,in)
  Tensor bias;             // conv2d (O) / linear (out)

  bool has_parameters() const { return kind == LayerKind::conv2d || kind == LayerKind::linear; }
};

struct Prediction {
  std::size_t label = 0;
  Tensor scores;  // raw outputs, no softmax
};

/// Index of the largest score; ties go to the lowest index.
std::size_t argmax(const Tensor& scores);

/// Graph handles produced while running a model forward.
struct ForwardRecord {
  std::vector<Var> parameters;     // weight, bias per parameterized layer, in layer order
  std::vector<Var> layer_outputs;  // one per layer
};

/// Sequential classifier. The last layer emits raw class scores.
class Model {
 public:
  Model() = default;
  Model(Shape input_shape, std::vector<Layer> layers);

  const Shape& input_shape() const noexcept { return input_shape_; }
  const Shape& output_shape() const noexcept { return output_shape_; }
  std::size_t num_classes() const { return output_shape_.at(0); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  std::optional<std::size_t> find_layer(std::string_view name) const;

  /// Adds the model's layers on top of `x`. With `trainable` the parameters
  /// become gradient-carrying leaves (listed in `record->parameters`).
  Var forward(Graph& graph, Var x, ForwardRecord* record = nullptr, bool trainable = false) const;

  Tensor raw_scores(const Tensor& x) const;
  Prediction predict(const Tensor& x) const;

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  /// Rounds every parameter to float32 precision (what a GAXM file stores).
  void round_parameters_to_float32();

 private:
  void check_input(const Tensor& x) const;

  Shape input_shape_;
  Shape output_shape_;
  std::vector<Layer> layers_;
};

struct MiniConvNetConfig {
  std::size_t channels = 3, height = 32, width = 32;
  std::size_t conv1_channels = 8, conv2_channels = 16, kernel = 3;
  std::size_t classes = 2;
};

/// conv1-relu1-pool1-conv2-relu2-pool2-flatten-fc with He-uniform init.
Model make_mini_conv_net(const MiniConvNetConfig& cfg, std::uint64_t seed);

/// flatten (if needed) + linear layer named "fc"; `weight` is (classes, input size).
Model make_linear_model(const Shape& input_shape, Tensor weight, std::optional<Tensor> bias = std::nullopt);

// ----- the analytic 2D classifier f(x) = sigma(W^-1 x) -----

struct Mat2 {
  double m11 = 1, m12 = 0, m21 = 0, m22 = 1;

  double det() const { return m11 * m22 - m12 * m21; }
  Mat2 inverse() const;
  std::array<double, 2> apply(std::array<double, 2> v) const {
    return {m11 * v[0] + m12 * v[1], m21 * v[0] + m22 * v[1]};
  }
};

Mat2 rotation(double theta);

enum class Activation { identity, sigmoid, tanh, leaky_relu };

struct PerfectClassifier2D {
  Mat2 W;
  Activation sigma = Activation::identity;
  double leaky_slope = 0.01;

  PerfectClassifier2D() = default;
  PerfectClassifier2D(Mat2 w, Activation act, double slope = 0.01);

  static PerfectClassifier2D rotated(double theta, Activation act) { return {rotation(theta), act}; }

  /// (sigma(a1), sigma(a2)) with (a1, a2) = W^-1 x, evaluated in closed form.
  std::array<double, 2> forward(std::array<double, 2> x) const;
  double activate(double v) const;

  /// Same function as a two-layer Model (linear "fc" holding W^-1, then sigma)
  /// so it can be differentiated and attributed like any other model.
  Model to_model() const;
};

}  // namespace heatax
