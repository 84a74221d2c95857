#include "mtl/numerics/tensor.hpp"

#include <algorithm>
#include <cstring>
#include <unordered_set>

#include "mtl/error.hpp"

namespace mtl {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor() : Tensor(Shape{}, false) {}

Tensor::Tensor(Shape shape, bool requires_grad)
    : Tensor(shape, std::vector<double>(shape_numel(shape), 0.0), requires_grad) {}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : node_(std::make_shared<detail::Node>()) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("tensor of shape " + shape_string(shape) + " given " +
                         std::to_string(data.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  set_requires_grad(requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{}, std::vector<double>{value}, requires_grad);
}

Tensor Tensor::from_op(Shape shape, std::vector<double> data, const std::vector<Tensor>& parents,
                       BackwardFn backward) {
  Tensor out(std::move(shape), std::move(data), false);
  const bool needs_grad =
      std::any_of(parents.begin(), parents.end(), [](const Tensor& p) { return p.requires_grad(); });
  if (needs_grad) {
    out.set_requires_grad(true);
    for (const Tensor& p : parents) {
      if (p.requires_grad()) out.node_->parents.push_back(p.node_);
    }
    out.node_->backward = std::move(backward);
  }
  return out;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw RankError("rows() on tensor of shape " + shape_string(shape()));
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw RankError("cols() on tensor of shape " + shape_string(shape()));
  return node_->shape[1];
}

double Tensor::item() const {
  if (numel() != 1) throw RankError("item() on tensor of shape " + shape_string(shape()));
  return node_->data[0];
}

void Tensor::set_requires_grad(bool value) {
  node_->requires_grad = value;
  if (value) {
    node_->grad.assign(node_->data.size(), 0.0);
  } else {
    node_->grad.clear();
    node_->grad.shrink_to_fit();
  }
}

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

Tensor Tensor::clone() const {
  Tensor out(node_->shape, node_->data, false);
  if (node_->requires_grad) {
    out.node_->requires_grad = true;
    out.node_->grad = node_->grad;
  }
  return out;
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  return shape() == other.shape() &&
         std::memcmp(node_->data.data(), other.node_->data.data(), numel() * sizeof(double)) == 0;
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw RankError("backward requires a single-element loss, got shape " +
                    shape_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; parents are visited in insertion order so the
  // sweep order is a pure function of the graph.
  using NodePtr = detail::Node*;
  std::vector<NodePtr> order;
  std::unordered_set<NodePtr> visited;
  std::vector<std::pair<NodePtr, std::size_t>> stack;
  stack.emplace_back(loss.node_.get(), 0);
  visited.insert(loss.node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodePtr parent = node->parents[next++].get();
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward((*it)->grad);
  }
  for (NodePtr node : order) {
    if (node->backward) {
      node->backward = nullptr;
      node->parents.clear();
    }
  }
}

}  // namespace mtl
