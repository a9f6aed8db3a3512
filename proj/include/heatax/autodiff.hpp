#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "heatax/tensor.hpp"

namespace heatax {

enum class OpKind {
  leaf,
  matmul,
  conv2d,
  max_pool,
  global_avg_pool,
  add,
  sub,
  mul,
  relu,
  leaky_relu,
  sigmoid,
  tanh,
  flatten,
  bias_add,
  scale,
  add_scalar,
  reciprocal,
  sum,
  mean,
  softmax_cross_entropy,
};

std::string_view to_string(OpKind op);

/// How rectifiers (and, for `rescale`, every elementwise nonlinearity and
/// max-pool) route gradient during backward().
///  - standard:    true derivative
///  - deconv_relu: relu(upstream), ignoring the forward sign
///  - guided_relu: upstream masked by forward-positive AND upstream-positive
///  - rescale:     DeepLIFT multipliers (dy/dx replaced by delta-out/delta-in
///                 against a reference graph of identical structure)
enum class BackwardRule { standard, deconv_relu, guided_relu, rescale };

std::string_view to_string(BackwardRule rule);

struct Var {
  std::size_t id = 0;
};

/// Define-by-run computation graph. Values are computed eagerly as nodes are
/// added, so a node's value is available as soon as the op returns; node ids
/// are a topological order. One Graph is used by one thread; build a fresh
/// graph per evaluation.
class Graph {
 public:
  Var input(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return input(std::move(value), false); }

  Var matmul(Var a, Var b);  // [m,k]x[k] -> [m] or [m,k]x[k,n] -> [m,n]
  Var conv2d(Var x, Var weight, std::size_t stride = 1, std::size_t pad = 0);
  Var max_pool(Var x, std::size_t size = 2, std::size_t stride = 2);
  Var global_avg_pool(Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var relu(Var x);
  Var leaky_relu(Var x, double slope);
  Var sigmoid(Var x);
  Var tanh(Var x);
  Var flatten(Var x);
  Var bias_add(Var x, Var bias);  // bias [C] added along the leading axis of x
  Var scale(Var x, double factor);
  Var add_scalar(Var x, double offset);
  Var reciprocal(Var x);
  Var sum(Var x);   // -> [1]
  Var mean(Var x);  // -> [1]
  Var dot(Var a, Var b) { return sum(mul(a, b)); }
  Var softmax_cross_entropy(Var logits, std::size_t label);  // -> [1]

  /// Per-node rule override; only rectifier (relu) nodes accept one.
  void set_backward_override(Var relu_node, BackwardRule rule);

  const Tensor& value(Var v) const;
  const Tensor& forward(Var root) const { return value(root); }
  OpKind op(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Reverse pass from `root` seeded with `seed` (same shape as root). The
  /// `rescale` rule needs `reference`: the same graph built on the baseline input.
  void backward(Var root, const Tensor& seed, BackwardRule rule = BackwardRule::standard,
                const Graph* reference = nullptr);
  void backward(Var root) { backward(root, Tensor::ones(value(root).shape())); }

  /// Gradient of the last backward() root w.r.t. `v`; zeros for nodes the
  /// gradient did not reach. Throws if backward() has not run.
  const Tensor& grad(Var v) const;

 private:
  struct Node {
    OpKind op = OpKind::leaf;
    std::vector<std::size_t> parents;
    Tensor value;
    bool requires_grad = false;
    std::size_t stride = 1, pad = 0, pool = 2, label = 0;
    double scalar = 0.0;
    std::vector<std::size_t> argmax;  // max-pool routing, one per output
    std::optional<BackwardRule> override_rule;
  };

  const Node& node(Var v) const;
  Var push(Node n);
  void propagate(std::size_t id, BackwardRule rule, const Graph* reference);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  bool has_grads_ = false;
};

}  // namespace heatax
