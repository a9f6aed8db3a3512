#include "heatax/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "heatax/error.hpp"
#include "heatax/kernels.hpp"

namespace heatax {

std::string_view to_string(OpKind op) {
  switch (op) {
    case OpKind::leaf: return "leaf";
    case OpKind::matmul: return "matmul";
    case OpKind::conv2d: return "conv2d";
    case OpKind::max_pool: return "max_pool";
    case OpKind::global_avg_pool: return "global_avg_pool";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::relu: return "relu";
    case OpKind::leaky_relu: return "leaky_relu";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::tanh: return "tanh";
    case OpKind::flatten: return "flatten";
    case OpKind::bias_add: return "bias_add";
    case OpKind::scale: return "scale";
    case OpKind::add_scalar: return "add_scalar";
    case OpKind::reciprocal: return "reciprocal";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::softmax_cross_entropy: return "softmax_cross_entropy";
  }
  return "unknown";
}

std::string_view to_string(BackwardRule rule) {
  switch (rule) {
    case BackwardRule::standard: return "standard";
    case BackwardRule::deconv_relu: return "deconv-relu";
    case BackwardRule::guided_relu: return "guided-relu";
    case BackwardRule::rescale: return "rescale";
  }
  return "unknown";
}

namespace {

[[noreturn]] void shape_error(OpKind op, const std::string& detail) {
  fail(ErrorCode::shape_mismatch, std::string(to_string(op)) + ": " + detail);
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

kernels::Conv2dGeometry conv_geometry(const Tensor& x, const Tensor& w, std::size_t stride,
                                      std::size_t pad) {
  kernels::Conv2dGeometry g;
  g.in_channels = x.dim(0);
  g.in_height = x.dim(1);
  g.in_width = x.dim(2);
  g.out_channels = w.dim(0);
  g.kernel_h = w.dim(2);
  g.kernel_w = w.dim(3);
  g.stride = stride;
  g.pad = pad;
  return g;
}

// Below this |delta-in| the rescale rule falls back to the gradient.
constexpr double kRescaleEps = 1e-10;

}  // namespace

const Graph::Node& Graph::node(Var v) const {
  if (v.id >= nodes_.size()) fail(ErrorCode::invalid_argument, "graph: unknown node id " + std::to_string(v.id));
  return nodes_[v.id];
}

Var Graph::push(Node n) {
  if (!n.value.all_finite()) {
    fail(ErrorCode::numeric, std::string(to_string(n.op)) + ": produced a non-finite value");
  }
  for (auto p : n.parents) n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  nodes_.push_back(std::move(n));
  has_grads_ = false;
  return Var{nodes_.size() - 1};
}

Var Graph::input(Tensor value, bool requires_grad) {
  if (value.empty()) fail(ErrorCode::invalid_argument, "leaf: empty tensor");
  Node n;
  n.op = OpKind::leaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

const Tensor& Graph::value(Var v) const { return node(v).value; }
OpKind Graph::op(Var v) const { return node(v).op; }

Var Graph::matmul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.rank() != 2) shape_error(OpKind::matmul, "left operand must be rank 2, got " + shape_str(A.shape()));
  if (B.rank() != 1 && B.rank() != 2) {
    shape_error(OpKind::matmul, "right operand must be rank 1 or 2, got " + shape_str(B.shape()));
  }
  const std::size_t m = A.dim(0), k = A.dim(1), n = B.rank() == 1 ? 1 : B.dim(1);
  if (B.dim(0) != k) shape_error(OpKind::matmul, shape_str(A.shape()) + " x " + shape_str(B.shape()));
  Node out;
  out.op = OpKind::matmul;
  out.parents = {a.id, b.id};
  out.value = B.rank() == 1 ? Tensor({m}) : Tensor({m, n});
  kernels::matmul(A.data(), B.data(), m, k, n, out.value.data());
  return push(std::move(out));
}

Var Graph::conv2d(Var x, Var weight, std::size_t stride, std::size_t pad) {
  const Tensor& X = value(x);
  const Tensor& W = value(weight);
  if (X.rank() != 3) shape_error(OpKind::conv2d, "input must be (C,H,W), got " + shape_str(X.shape()));
  if (W.rank() != 4) shape_error(OpKind::conv2d, "kernel must be (O,C,kh,kw), got " + shape_str(W.shape()));
  if (W.dim(1) != X.dim(0)) {
    shape_error(OpKind::conv2d, "input channels " + std::to_string(X.dim(0)) + " != kernel channels " +
                                    std::to_string(W.dim(1)));
  }
  if (stride == 0) fail(ErrorCode::invalid_argument, "conv2d: stride must be positive");
  if (X.dim(1) + 2 * pad < W.dim(2) || X.dim(2) + 2 * pad < W.dim(3)) {
    shape_error(OpKind::conv2d, "kernel " + shape_str(W.shape()) + " larger than padded input " + shape_str(X.shape()));
  }
  const auto g = conv_geometry(X, W, stride, pad);
  Node out;
  out.op = OpKind::conv2d;
  out.parents = {x.id, weight.id};
  out.stride = stride;
  out.pad = pad;
  out.value = Tensor({g.out_channels, g.out_height(), g.out_width()});
  kernels::conv2d_forward(X.data(), W.data(), g, out.value.data());
  return push(std::move(out));
}

Var Graph::max_pool(Var x, std::size_t size, std::size_t stride) {
  const Tensor& X = value(x);
  if (X.rank() != 3) shape_error(OpKind::max_pool, "input must be (C,H,W), got " + shape_str(X.shape()));
  if (size == 0 || stride == 0) fail(ErrorCode::invalid_argument, "max_pool: size and stride must be positive");
  if (X.dim(1) < size || X.dim(2) < size) shape_error(OpKind::max_pool, "window larger than input " + shape_str(X.shape()));
  const std::size_t C = X.dim(0), H = X.dim(1), W = X.dim(2);
  const std::size_t oh = (H - size) / stride + 1, ow = (W - size) / stride + 1;
  Node out;
  out.op = OpKind::max_pool;
  out.parents = {x.id};
  out.pool = size;
  out.stride = stride;
  out.value = Tensor({C, oh, ow});
  out.argmax.resize(C * oh * ow);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xo = 0; xo < ow; ++xo) {
        // strict '>' keeps the first maximum in scan order
        std::size_t best = (c * H + y * stride) * W + xo * stride;
        for (std::size_t dy = 0; dy < size; ++dy) {
          for (std::size_t dx = 0; dx < size; ++dx) {
            const std::size_t idx = (c * H + y * stride + dy) * W + xo * stride + dx;
            if (X[idx] > X[best]) best = idx;
          }
        }
        const std::size_t o = (c * oh + y) * ow + xo;
        out.argmax[o] = best;
        out.value[o] = X[best];
      }
    }
  }
  return push(std::move(out));
}

Var Graph::global_avg_pool(Var x) {
  const Tensor& X = value(x);
  if (X.rank() != 3) shape_error(OpKind::global_avg_pool, "input must be (C,H,W), got " + shape_str(X.shape()));
  const std::size_t C = X.dim(0), plane = X.dim(1) * X.dim(2);
  Node out;
  out.op = OpKind::global_avg_pool;
  out.parents = {x.id};
  out.value = Tensor({C});
  for (std::size_t c = 0; c < C; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += X[c * plane + i];
    out.value[c] = acc / static_cast<double>(plane);
  }
  return push(std::move(out));
}

namespace {

template <typename F>
Tensor elementwise(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

template <typename F>
Tensor unary(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

Var Graph::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) shape_error(OpKind::add, shape_str(A.shape()) + " vs " + shape_str(B.shape()));
  Node out;
  out.op = OpKind::add;
  out.parents = {a.id, b.id};
  out.value = elementwise(A, B, [](double p, double q) { return p + q; });
  return push(std::move(out));
}

Var Graph::sub(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) shape_error(OpKind::sub, shape_str(A.shape()) + " vs " + shape_str(B.shape()));
  Node out;
  out.op = OpKind::sub;
  out.parents = {a.id, b.id};
  out.value = elementwise(A, B, [](double p, double q) { return p - q; });
  return push(std::move(out));
}

Var Graph::mul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) shape_error(OpKind::mul, shape_str(A.shape()) + " vs " + shape_str(B.shape()));
  Node out;
  out.op = OpKind::mul;
  out.parents = {a.id, b.id};
  out.value = elementwise(A, B, [](double p, double q) { return p * q; });
  return push(std::move(out));
}

Var Graph::relu(Var x) {
  Node out;
  out.op = OpKind::relu;
  out.parents = {x.id};
  out.value = unary(value(x), [](double v) { return v > 0 ? v : 0.0; });
  return push(std::move(out));
}

Var Graph::leaky_relu(Var x, double slope) {
  Node out;
  out.op = OpKind::leaky_relu;
  out.parents = {x.id};
  out.scalar = slope;
  out.value = unary(value(x), [slope](double v) { return v > 0 ? v : slope * v; });
  return push(std::move(out));
}

Var Graph::sigmoid(Var x) {
  Node out;
  out.op = OpKind::sigmoid;
  out.parents = {x.id};
  out.value = unary(value(x), sigmoid_value);
  return push(std::move(out));
}

Var Graph::tanh(Var x) {
  Node out;
  out.op = OpKind::tanh;
  out.parents = {x.id};
  out.value = unary(value(x), [](double v) { return std::tanh(v); });
  return push(std::move(out));
}

Var Graph::flatten(Var x) {
  Node out;
  out.op = OpKind::flatten;
  out.parents = {x.id};
  out.value = value(x).reshaped({value(x).size()});
  return push(std::move(out));
}

Var Graph::bias_add(Var x, Var bias) {
  const Tensor& X = value(x);
  const Tensor& B = value(bias);
  if (B.rank() != 1 || B.dim(0) != X.dim(0)) {
    shape_error(OpKind::bias_add, "bias " + shape_str(B.shape()) + " does not match leading axis of " +
                                      shape_str(X.shape()));
  }
  const std::size_t inner = X.size() / X.dim(0);
  Node out;
  out.op = OpKind::bias_add;
  out.parents = {x.id, bias.id};
  out.value = X;
  for (std::size_t c = 0; c < X.dim(0); ++c) {
    for (std::size_t i = 0; i < inner; ++i) out.value[c * inner + i] += B[c];
  }
  return push(std::move(out));
}

Var Graph::scale(Var x, double factor) {
  Node out;
  out.op = OpKind::scale;
  out.parents = {x.id};
  out.scalar = factor;
  out.value = unary(value(x), [factor](double v) { return v * factor; });
  return push(std::move(out));
}

Var Graph::add_scalar(Var x, double offset) {
  Node out;
  out.op = OpKind::add_scalar;
  out.parents = {x.id};
  out.scalar = offset;
  out.value = unary(value(x), [offset](double v) { return v + offset; });
  return push(std::move(out));
}

Var Graph::reciprocal(Var x) {
  Node out;
  out.op = OpKind::reciprocal;
  out.parents = {x.id};
  out.value = unary(value(x), [](double v) { return 1.0 / v; });
  return push(std::move(out));
}

Var Graph::sum(Var x) {
  Node out;
  out.op = OpKind::sum;
  out.parents = {x.id};
  out.value = Tensor::scalar(value(x).sum());
  return push(std::move(out));
}

Var Graph::mean(Var x) {
  Node out;
  out.op = OpKind::mean;
  out.parents = {x.id};
  out.value = Tensor::scalar(value(x).sum() / static_cast<double>(value(x).size()));
  return push(std::move(out));
}

Var Graph::softmax_cross_entropy(Var logits, std::size_t label) {
  const Tensor& Z = value(logits);
  if (Z.rank() != 1) shape_error(OpKind::softmax_cross_entropy, "logits must be rank 1, got " + shape_str(Z.shape()));
  if (label >= Z.size()) fail(ErrorCode::invalid_argument, "softmax_cross_entropy: label out of range");
  double zmax = Z[0];
  for (double v : Z.data()) zmax = std::max(zmax, v);
  double acc = 0.0;
  for (double v : Z.data()) acc += std::exp(v - zmax);
  Node out;
  out.op = OpKind::softmax_cross_entropy;
  out.parents = {logits.id};
  out.label = label;
  out.value = Tensor::scalar(zmax + std::log(acc) - Z[label]);
  return push(std::move(out));
}

void Graph::set_backward_override(Var relu_node, BackwardRule rule) {
  Node& n = nodes_.at(relu_node.id);
  if (n.op != OpKind::relu) {
    fail(ErrorCode::invalid_argument,
         "backward override applies only to relu nodes, not " + std::string(to_string(n.op)));
  }
  n.override_rule = rule;
}

const Tensor& Graph::grad(Var v) const {
  if (!has_grads_) fail(ErrorCode::invalid_state, "grad: backward() has not been run on this graph");
  if (v.id >= grads_.size()) fail(ErrorCode::invalid_argument, "grad: node was not reachable from the root");
  return grads_[v.id];
}

void Graph::backward(Var root, const Tensor& seed, BackwardRule rule, const Graph* reference) {
  const Node& r = node(root);
  if (!seed.same_shape(r.value)) {
    fail(ErrorCode::shape_mismatch, "backward: seed " + shape_str(seed.shape()) + " vs root " + shape_str(r.value.shape()));
  }
  if (rule == BackwardRule::rescale) {
    if (reference == nullptr) fail(ErrorCode::invalid_argument, "backward: rescale rule needs a reference graph");
    if (reference->nodes_.size() <= root.id) {
      fail(ErrorCode::invalid_argument, "backward: reference graph is shorter than this graph");
    }
    for (std::size_t i = 0; i <= root.id; ++i) {
      if (reference->nodes_[i].op != nodes_[i].op || !reference->nodes_[i].value.same_shape(nodes_[i].value)) {
        fail(ErrorCode::invalid_argument, "backward: reference graph structure differs at node " + std::to_string(i));
      }
    }
  }
  grads_.clear();
  grads_.reserve(root.id + 1);
  for (std::size_t i = 0; i <= root.id; ++i) grads_.emplace_back(nodes_[i].value.shape());
  grads_[root.id] = seed;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    if (nodes_[i].requires_grad && nodes_[i].op != OpKind::leaf) propagate(i, rule, reference);
  }
  has_grads_ = true;
}

void Graph::propagate(std::size_t id, BackwardRule rule, const Graph* reference) {
  const Node& n = nodes_[id];
  const Tensor& g = grads_[id];
  auto wants = [&](std::size_t parent_slot) { return nodes_[n.parents[parent_slot]].requires_grad; };
  auto pgrad = [&](std::size_t parent_slot) -> Tensor& { return grads_[n.parents[parent_slot]]; };
  auto pvalue = [&](std::size_t parent_slot) -> const Tensor& { return nodes_[n.parents[parent_slot]].value; };

  // DeepLIFT multiplier: delta-out / delta-in, falling back to the local derivative.
  auto rescaled = [&](std::size_t i, double derivative) {
    const double dx = pvalue(0)[i] - reference->nodes_[n.parents[0]].value[i];
    if (std::abs(dx) < kRescaleEps) return derivative;
    return (n.value[i] - reference->nodes_[id].value[i]) / dx;
  };
  const bool rescale = rule == BackwardRule::rescale;

  switch (n.op) {
    case OpKind::leaf:
      break;
    case OpKind::matmul: {
      const Tensor& A = pvalue(0);
      const Tensor& B = pvalue(1);
      const std::size_t m = A.dim(0), k = A.dim(1), cols = B.rank() == 1 ? 1 : B.dim(1);
      if (wants(0)) kernels::matmul_backward_a(g.data(), B.data(), m, k, cols, pgrad(0).data());
      if (wants(1)) kernels::matmul_backward_b(g.data(), A.data(), m, k, cols, pgrad(1).data());
      break;
    }
    case OpKind::conv2d: {
      const auto geo = conv_geometry(pvalue(0), pvalue(1), n.stride, n.pad);
      if (wants(0)) kernels::conv2d_backward_input(g.data(), pvalue(1).data(), geo, pgrad(0).data());
      if (wants(1)) kernels::conv2d_backward_weight(g.data(), pvalue(0).data(), geo, pgrad(1).data());
      break;
    }
    case OpKind::max_pool: {
      if (!wants(0)) break;
      Tensor& gx = pgrad(0);
      for (std::size_t o = 0; o < n.argmax.size(); ++o) {
        const std::size_t src = n.argmax[o];
        double m = 1.0;
        if (rescale) {
          const double dx = pvalue(0)[src] - reference->nodes_[n.parents[0]].value[src];
          if (std::abs(dx) >= kRescaleEps) m = (n.value[o] - reference->nodes_[id].value[o]) / dx;
        }
        gx[src] += m * g[o];
      }
      break;
    }
    case OpKind::global_avg_pool: {
      if (!wants(0)) break;
      Tensor& gx = pgrad(0);
      const std::size_t plane = gx.size() / g.size();
      for (std::size_t c = 0; c < g.size(); ++c) {
        const double share = g[c] / static_cast<double>(plane);
        for (std::size_t i = 0; i < plane; ++i) gx[c * plane + i] += share;
      }
      break;
    }
    case OpKind::add:
      if (wants(0)) pgrad(0) += g;
      if (wants(1)) pgrad(1) += g;
      break;
    case OpKind::sub:
      if (wants(0)) pgrad(0) += g;
      if (wants(1)) {
        Tensor& gb = pgrad(1);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
      break;
    case OpKind::mul:
      if (wants(0)) {
        Tensor& ga = pgrad(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * pvalue(1)[i];
      }
      if (wants(1)) {
        Tensor& gb = pgrad(1);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * pvalue(0)[i];
      }
      break;
    case OpKind::relu: {
      if (!wants(0)) break;
      const BackwardRule eff = n.override_rule.value_or(rule);
      Tensor& gx = pgrad(0);
      const Tensor& x = pvalue(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        switch (eff) {
          case BackwardRule::standard: gx[i] += x[i] > 0 ? g[i] : 0.0; break;
          case BackwardRule::deconv_relu: gx[i] += g[i] > 0 ? g[i] : 0.0; break;
          case BackwardRule::guided_relu: gx[i] += (x[i] > 0 && g[i] > 0) ? g[i] : 0.0; break;
          case BackwardRule::rescale:
            if (reference == nullptr) fail(ErrorCode::invalid_argument, "relu: rescale override needs a reference graph");
            gx[i] += g[i] * rescaled(i, x[i] > 0 ? 1.0 : 0.0);
            break;
        }
      }
      break;
    }
    case OpKind::leaky_relu: {
      if (!wants(0)) break;
      Tensor& gx = pgrad(0);
      const Tensor& x = pvalue(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = x[i] > 0 ? 1.0 : n.scalar;
        gx[i] += g[i] * (rescale ? rescaled(i, d) : d);
      }
      break;
    }
    case OpKind::sigmoid: {
      if (!wants(0)) break;
      Tensor& gx = pgrad(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = n.value[i];
        const double d = s * (1.0 - s);
        gx[i] += g[i] * (rescale ? rescaled(i, d) : d);
      }
      break;
    }
    case OpKind::tanh: {
      if (!wants(0)) break;
      Tensor& gx = pgrad(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = n.value[i];
        const double d = 1.0 - t * t;
        gx[i] += g[i] * (rescale ? rescaled(i, d) : d);
      }
      break;
    }
    case OpKind::flatten:
      if (wants(0)) {
        Tensor& gx = pgrad(0);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      break;
    case OpKind::bias_add: {
      if (wants(0)) pgrad(0) += g;
      if (wants(1)) {
        Tensor& gb = pgrad(1);
        const std::size_t inner = g.size() / gb.size();
        for (std::size_t c = 0; c < gb.size(); ++c) {
          double acc = 0.0;
          for (std::size_t i = 0; i < inner; ++i) acc += g[c * inner + i];
          gb[c] += acc;
        }
      }
      break;
    }
    case OpKind::scale:
      if (wants(0)) {
        Tensor& gx = pgrad(0);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.scalar;
      }
      break;
    case OpKind::add_scalar:
      if (wants(0)) pgrad(0) += g;
      break;
    case OpKind::reciprocal:
      if (wants(0)) {
        Tensor& gx = pgrad(0);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] -= g[i] * n.value[i] * n.value[i];
      }
      break;
    case OpKind::sum:
      if (wants(0)) {
        Tensor& gx = pgrad(0);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
      }
      break;
    case OpKind::mean:
      if (wants(0)) {
        Tensor& gx = pgrad(0);
        const double share = g[0] / static_cast<double>(gx.size());
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += share;
      }
      break;
    case OpKind::softmax_cross_entropy: {
      if (!wants(0)) break;
      const Tensor& z = pvalue(0);
      Tensor& gz = pgrad(0);
      double zmax = z[0];
      for (double v : z.data()) zmax = std::max(zmax, v);
      double denom = 0.0;
      for (double v : z.data()) denom += std::exp(v - zmax);
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double p = std::exp(z[i] - zmax) / denom;
        gz[i] += g[0] * (p - (i == n.label ? 1.0 : 0.0));
      }
      break;
    }
  }
}

}  // namespace heatax
