#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "heatax/model.hpp"

namespace heatax::toy {

using Vec2 = std::array<double, 2>;

/// x = a1 x(1) + a2 x(2) where x(i) are the columns of W.
struct ToyInstance {
  Mat2 W;
  double a1 = 0.0, a2 = 0.0;
  double k_eta = 0.0;  // step count times learning rate
  Vec2 w{1.0, 1.0};

  static ToyInstance rotated(double theta, double a1, double a2, double k_eta) {
    return {rotation(theta), a1, a2, k_eta, {1.0, 1.0}};
  }
  Vec2 x() const { return W.apply({a1, a2}); }
};

/// A - B where (A, B) = W^-1 (w * x).
double delta(const ToyInstance& t);

/// Gradient of delta with respect to w (independent of w).
Vec2 delta_gradient(const ToyInstance& t);

/// h = (w + k_eta grad_w delta) * x.
Vec2 closed_form_heatmap(const ToyInstance& t);

/// `steps` explicit gradient-ascent steps of size `eta` on delta, where every
/// gradient comes from the autodiff graph; returns w * x for the final w.
Vec2 numeric_ascent_heatmap(const ToyInstance& t, std::size_t steps, double eta);

/// kappa . [f(x + h) - f(x)] for the analytic classifier.
double co_score(const PerfectClassifier2D& f, Vec2 x, Vec2 h, std::size_t truth);

struct SweepRow {
  double theta = 0.0;
  double x1 = 0.0, x2 = 0.0;
  double h1 = 0.0, h2 = 0.0;
};

std::vector<SweepRow> rotation_sweep(double a1, double a2, double k_eta, const std::vector<double>& thetas);

/// `points` evenly spaced angles over [lo, hi], endpoints included.
std::vector<double> theta_grid(std::size_t points = 97, double lo = -3.141592653589793, double hi = 3.141592653589793);

}  // namespace heatax::toy
