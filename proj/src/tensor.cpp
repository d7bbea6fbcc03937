#include "mlrn/tensor.hpp"

#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace mlrn {

namespace detail {

struct Node {
  OpKind kind = OpKind::Leaf;
  std::vector<Tensor> inputs;
  BackwardFn backward;
};

struct TensorImpl {
  Shape shape;
  Values values;
  Values grad;
  bool has_grad = false;
  bool requires_grad = false;
  std::shared_ptr<Node> node;  // null for leaves
};

}  // namespace detail

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << n << "," << c << "," << h << "," << w << ")";
  return os.str();
}

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Conv2d: return "conv2d";
    case OpKind::Relu: return "relu";
    case OpKind::Concat: return "concat";
    case OpKind::Add: return "add";
    case OpKind::PixelShuffle: return "pixel_shuffle";
    case OpKind::L1Loss: return "l1_loss";
    case OpKind::Sum: return "sum";
    case OpKind::Scale: return "scale";
    case OpKind::Custom: return "custom";
  }
  return "unknown";
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ShapeError("negative tensor extent " + shape.str());
  }
}

}  // namespace

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) { return filled(shape, 0.0, requires_grad); }

Tensor Tensor::filled(const Shape& shape, double value, bool requires_grad) {
  check_shape(shape);
  return from_values(shape, Values::Constant(shape.numel(), value), requires_grad);
}

Tensor Tensor::from_values(const Shape& shape, Values values, bool requires_grad) {
  check_shape(shape);
  if (values.size() != shape.numel()) {
    throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " + shape.str());
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape;
  impl->values = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

const Shape& Tensor::shape() const { return impl_->shape; }
const Values& Tensor::values() const { return impl_->values; }

double Tensor::item() const {
  if (impl_->values.size() != 1) throw ShapeError("item() on non-scalar tensor " + impl_->shape.str());
  return impl_->values[0];
}

double Tensor::at(Index n, Index c, Index y, Index x) const {
  const Shape& s = impl_->shape;
  return impl_->values[((n * s.c + c) * s.h + y) * s.w + x];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }
bool Tensor::is_leaf() const { return impl_->node == nullptr; }
OpKind Tensor::op() const { return impl_->node ? impl_->node->kind : OpKind::Leaf; }

const std::vector<Tensor>& Tensor::inputs() const {
  static const std::vector<Tensor> kNone;
  return impl_->node ? impl_->node->inputs : kNone;
}

bool Tensor::has_grad() const { return impl_->has_grad; }

const Values& Tensor::grad() const {
  if (!impl_->has_grad) throw std::logic_error("tensor has no gradient");
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_->has_grad) impl_->grad.setZero();
}

Values& Tensor::mutable_values() {
  if (!is_leaf()) throw std::logic_error("only leaf tensors are writable");
  return impl_->values;
}

Tensor Tensor::detach(bool requires_grad) const { return from_values(shape(), values(), requires_grad); }

Tensor make_result(OpKind kind, std::vector<Tensor> inputs, const Shape& shape, Values values, BackwardFn fn) {
  Tensor out = Tensor::from_values(shape, std::move(values));
  bool needs = false;
  for (const Tensor& t : inputs) needs = needs || t.requires_grad();
  auto node = std::make_shared<detail::Node>();
  node->kind = kind;
  node->inputs = std::move(inputs);
  node->backward = std::move(fn);
  out.impl_->node = std::move(node);
  out.impl_->requires_grad = needs;
  return out;
}

std::vector<Tensor> topological_order(const Tensor& root) {
  std::vector<Tensor> order;
  std::unordered_set<const detail::TensorImpl*> seen;
  // Iterative post-order DFS; graphs for deep models overflow recursion.
  std::vector<std::pair<Tensor, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root.id());
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    const auto& ins = t.inputs();
    if (next < ins.size()) {
      const Tensor& child = ins[next++];
      if (seen.insert(child.id()).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(t);
      stack.pop_back();
    }
  }
  return order;
}

void backward(const Tensor& loss) {
  if (loss.shape().numel() != 1) throw ShapeError("backward() needs a single-element loss, got " + loss.shape().str());
  if (!loss.requires_grad()) return;

  std::vector<Tensor> order = topological_order(loss);
  std::unordered_map<const detail::TensorImpl*, Values> grads;
  grads.emplace(loss.id(), Values::Ones(1));

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Tensor& t = *it;
    if (!t.requires_grad()) continue;
    auto found = grads.find(t.id());
    if (found == grads.end()) continue;
    Values g = std::move(found->second);
    grads.erase(found);

    if (t.is_leaf()) {
      auto& impl = *t.impl_;
      if (!impl.has_grad) {
        impl.grad = Values::Zero(impl.values.size());
        impl.has_grad = true;
      }
      impl.grad += g;
      continue;
    }

    const auto& node = *t.impl_->node;
    std::vector<Values*> slots(node.inputs.size(), nullptr);
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      const Tensor& in = node.inputs[i];
      if (!in.requires_grad()) continue;
      auto [slot, inserted] = grads.try_emplace(in.id());
      if (inserted) slot->second = Values::Zero(in.shape().numel());
      slots[i] = &slot->second;
    }
    node.backward(g, slots);
  }
}

}  // namespace mlrn
