#include "heatax/toy.hpp"

#include "heatax/autodiff.hpp"
#include "heatax/error.hpp"

namespace heatax::toy {

Vec2 delta_gradient(const ToyInstance& t) {
  const Mat2 inv = t.W.inverse();
  const Vec2 x = t.x();
  return {(inv.m11 - inv.m21) * x[0], -(inv.m22 - inv.m12) * x[1]};
}

double delta(const ToyInstance& t) {
  const Vec2 g = delta_gradient(t);
  return t.w[0] * g[0] + t.w[1] * g[1];
}

Vec2 closed_form_heatmap(const ToyInstance& t) {
  if (!(t.k_eta >= 0.0)) fail(ErrorCode::invalid_argument, "toy: k*eta must be >= 0");
  const Vec2 g = delta_gradient(t);
  const Vec2 x = t.x();
  return {(t.w[0] + t.k_eta * g[0]) * x[0], (t.w[1] + t.k_eta * g[1]) * x[1]};
}

Vec2 numeric_ascent_heatmap(const ToyInstance& t, std::size_t steps, double eta) {
  const Mat2 inv = t.W.inverse();
  const Vec2 x = t.x();
  Tensor w = Tensor::vector({t.w[0], t.w[1]});
  const Tensor xt = Tensor::vector({x[0], x[1]});
  const Tensor winv({2, 2}, {inv.m11, inv.m12, inv.m21, inv.m22});
  const Tensor diff = Tensor::vector({1.0, -1.0});
  for (std::size_t k = 0; k < steps; ++k) {
    Graph g;
    const Var wv = g.input(w);
    const Var ab = g.matmul(g.constant(winv), g.mul(wv, g.constant(xt)));
    const Var d = g.dot(g.constant(diff), ab);
    g.backward(d);
    const Tensor& grad = g.grad(wv);
    w[0] += eta * grad[0];
    w[1] += eta * grad[1];
  }
  return {w[0] * x[0], w[1] * x[1]};
}

double co_score(const PerfectClassifier2D& f, Vec2 x, Vec2 h, std::size_t truth) {
  if (truth > 1) fail(ErrorCode::invalid_argument, "toy: groundtruth must be 0 or 1");
  const Vec2 before = f.forward(x);
  const Vec2 after = f.forward({x[0] + h[0], x[1] + h[1]});
  const double k_other = -1.0;  // -1/(C-1) with C = 2
  const std::size_t other = 1 - truth;
  return (after[truth] - before[truth]) + k_other * (after[other] - before[other]);
}

std::vector<SweepRow> rotation_sweep(double a1, double a2, double k_eta, const std::vector<double>& thetas) {
  if (thetas.empty()) fail(ErrorCode::invalid_argument, "toy: theta grid is empty");
  std::vector<SweepRow> rows;
  rows.reserve(thetas.size());
  for (double theta : thetas) {
    const auto t = ToyInstance::rotated(theta, a1, a2, k_eta);
    const Vec2 x = t.x();
    const Vec2 h = closed_form_heatmap(t);
    rows.push_back({theta, x[0], x[1], h[0], h[1]});
  }
  return rows;
}

std::vector<double> theta_grid(std::size_t points, double lo, double hi) {
  if (points == 0) fail(ErrorCode::invalid_argument, "toy: grid needs at least one point");
  if (points == 1) return {lo};
  std::vector<double> g(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) g[i] = lo + step * static_cast<double>(i);
  g.back() = hi;
  return g;
}

}  // namespace heatax::toy
