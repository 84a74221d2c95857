#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mtl {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tensor;

// Called once during backward with the gradient of the op's output. The
// closure owns whatever it captured from the forward pass and accumulates
// into its inputs' grad buffers.
using BackwardFn = std::function<void(std::span<const double> out_grad)>;

namespace detail {
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // sized iff requires_grad
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;
};
}  // namespace detail

// Dense row-major float64 array with a handle to its place in the
// computation graph. Copies alias the same storage; use clone() for a
// detached deep copy.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor scalar(double value, bool requires_grad = false);

  // Result of a differentiable op. `backward` is attached only when at least
  // one parent requires grad; otherwise the result is a plain constant.
  static Tensor from_op(Shape shape, std::vector<double> data, const std::vector<Tensor>& parents,
                        BackwardFn backward);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->data; }
  // Handle semantics: constness of the handle does not extend to storage.
  std::span<double> mutable_data() const { return node_->data; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() const { return node_->grad; }

  double item() const;
  double at(std::size_t i) const { return node_->data[i]; }
  double at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  // Allocates a zero grad buffer when enabled, drops it when disabled.
  void set_requires_grad(bool value);
  void zero_grad();
  bool has_backward() const { return static_cast<bool>(node_->backward); }

  Tensor clone() const;
  bool same_storage(const Tensor& other) const { return node_ == other.node_; }
  bool bitwise_equal(const Tensor& other) const;

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend void backward(const Tensor& loss);

  std::shared_ptr<detail::Node> node_;
};

// Reverse-mode sweep from a single-element tensor. Leaf grads accumulate;
// the graph behind `loss` is released afterwards.
void backward(const Tensor& loss);

}  // namespace mtl
