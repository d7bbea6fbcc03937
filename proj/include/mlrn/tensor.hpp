#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlrn {

using Index = std::int64_t;
using Values = Eigen::ArrayXd;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Shape {
  Index n = 0;
  Index c = 0;
  Index h = 0;
  Index w = 0;

  Index numel() const { return n * c * h * w; }
  Index plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Kinds of graph nodes. Custom nodes (tests, fault injection) use Custom.
enum class OpKind { Leaf, Conv2d, Relu, Concat, Add, PixelShuffle, L1Loss, Sum, Scale, Custom };

const char* op_name(OpKind kind);

class Tensor;

// Receives the upstream gradient and one accumulator per input. An accumulator
// is null when the corresponding input does not require a gradient.
using BackwardFn = std::function<void(const Values& grad_out, std::span<Values* const> grad_inputs)>;

namespace detail {
struct Node;
struct TensorImpl;
}  // namespace detail

/// Rank-4 (n, c, h, w) tensor of doubles, row-major. Copies share storage;
/// values are fixed after creation except through mutable_values() on leaves.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor filled(const Shape& shape, double value, bool requires_grad = false);
  static Tensor from_values(const Shape& shape, Values values, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  const Values& values() const;
  double item() const;
  double at(Index n, Index c, Index y, Index x) const;

  bool requires_grad() const;
  bool is_leaf() const;
  OpKind op() const;
  const std::vector<Tensor>& inputs() const;

  bool has_grad() const;
  const Values& grad() const;
  void zero_grad();

  // Leaf-only write access for optimizers and initializers.
  Values& mutable_values();

  // Same values, new leaf without history.
  Tensor detach(bool requires_grad = false) const;

  bool same_node(const Tensor& other) const { return impl_ == other.impl_; }
  const detail::TensorImpl* id() const { return impl_.get(); }

 private:
  friend Tensor make_result(OpKind, std::vector<Tensor>, const Shape&, Values, BackwardFn);
  friend void backward(const Tensor&);
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Records a new graph node. The result requires a gradient iff any input does.
Tensor make_result(OpKind kind, std::vector<Tensor> inputs, const Shape& shape, Values values, BackwardFn fn);

/// Reverse sweep from a single-element loss. Leaf gradients accumulate across
/// calls until zero_grad().
void backward(const Tensor& loss);

/// Every node reachable from `root`, inputs before consumers.
std::vector<Tensor> topological_order(const Tensor& root);

}  // namespace mlrn
