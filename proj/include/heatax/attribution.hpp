#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "heatax/model.hpp"
#include "heatax/tensor.hpp"

namespace heatax {

enum class Method { saliency, input_x_gradient, layer_gradcam, deconvolution, guided_backprop, deeplift };

struct MethodTag {
  Method method = Method::saliency;
  std::string layer;  // layer_gradcam only

  /// saliency | input-x-gradient | layer-gradcam:<layer> | deconvolution |
  /// guided-backprop | deeplift
  std::string str() const;
  static MethodTag parse(std::string_view text);

  bool operator==(const MethodTag&) const = default;
};

/// The six methods, GradCAM on `gradcam_layer`.
std::vector<MethodTag> all_methods(const std::string& gradcam_layer = "conv1");

struct Heatmap {
  Tensor values;  // same shape as the attributed input
  MethodTag method;
  std::size_t target = 0;
  bool normalized = false;
};

struct AttributionOptions {
  bool saliency_abs = false;  // |gradient| instead of the signed gradient
  Tensor baseline;            // DeepLIFT reference input; empty means all zeros
};

Heatmap attribute(const Model& model, const Tensor& x, std::size_t target, const MethodTag& method,
                  const AttributionOptions& opts = {});

/// h / max|h| over all channels; an all-zero map is returned unchanged.
Heatmap normalize(Heatmap h);

/// Attributes w.r.t. the model's own prediction, then normalizes.
Heatmap attribute_at_predicted(const Model& model, const Tensor& x, const MethodTag& method,
                               const AttributionOptions& opts = {});

}  // namespace heatax
