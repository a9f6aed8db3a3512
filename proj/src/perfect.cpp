#include <cmath>

#include "heatax/error.hpp"
#include "heatax/model.hpp"

namespace heatax {

namespace {
constexpr double kMinDet = 1e-12;
}

Mat2 Mat2::inverse() const {
  const double d = det();
  if (std::abs(d) <= kMinDet) fail(ErrorCode::invalid_argument, "mat2: singular matrix (|det| <= 1e-12)");
  return {m22 / d, -m12 / d, -m21 / d, m11 / d};
}

Mat2 rotation(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c, -s, s, c};
}

PerfectClassifier2D::PerfectClassifier2D(Mat2 w, Activation act, double slope)
    : W(w), sigma(act), leaky_slope(slope) {
  if (std::abs(W.det()) <= kMinDet) fail(ErrorCode::invalid_argument, "perfect classifier: W is singular");
}

double PerfectClassifier2D::activate(double v) const {
  switch (sigma) {
    case Activation::identity: return v;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-v));
    case Activation::tanh: return std::tanh(v);
    case Activation::leaky_relu: return v > 0 ? v : leaky_slope * v;
  }
  return v;
}

std::array<double, 2> PerfectClassifier2D::forward(std::array<double, 2> x) const {
  const auto a = W.inverse().apply(x);
  return {activate(a[0]), activate(a[1])};
}

Model PerfectClassifier2D::to_model() const {
  const Mat2 inv = W.inverse();
  Layer fc{.name = "fc", .kind = LayerKind::linear};
  fc.weight = Tensor({2, 2}, {inv.m11, inv.m12, inv.m21, inv.m22});
  fc.bias = Tensor::zeros({2});
  std::vector<Layer> layers;
  layers.push_back(std::move(fc));
  switch (sigma) {
    case Activation::identity: break;
    case Activation::sigmoid: layers.push_back({.name = "sigma", .kind = LayerKind::sigmoid}); break;
    case Activation::tanh: layers.push_back({.name = "sigma", .kind = LayerKind::tanh}); break;
    case Activation::leaky_relu:
      layers.push_back({.name = "sigma", .kind = LayerKind::leaky_relu, .slope = leaky_slope});
      break;
  }
  return Model({2}, std::move(layers));
}

}  // namespace heatax
