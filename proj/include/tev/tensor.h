#ifndef TEV_TENSOR_H_
#define TEV_TENSOR_H_

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tev {

using Shape = std::vector<int>;

std::string shape_string(const Shape &shape);
size_t shape_numel(const Shape &shape);

struct Node;

// Receives the output node; reads its grad and accumulates into the grads
// of the inputs it captured.
using BackwardFn = std::function<void(const Node &out)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  // Non-leaf nodes keep their inputs alive and know how to push gradients
  // back into them.
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;

  bool is_leaf() const { return !backward; }
};

// Shared handle to a dense row-major array of doubles plus a same-shape
// gradient accumulator. Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape &shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int axis) const { return node_->shape.at(axis); }
  size_t numel() const { return node_->value.size(); }

  std::span<double> values() { return node_->value; }
  std::span<const double> values() const { return node_->value; }
  std::span<double> grad() { return node_->grad; }
  std::span<const double> grad() const { return node_->grad; }

  double item() const;
  double &operator[](size_t i) { return node_->value[i]; }
  double operator[](size_t i) const { return node_->value[i]; }
  // Element (row, col) of a rank-2 tensor.
  double at(int row, int col) const {
    return node_->value[static_cast<size_t>(row) * node_->shape[1] + col];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad();

  Node *node() const { return node_.get(); }
  const std::shared_ptr<Node> &shared() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  friend Tensor make_result(Shape, std::vector<double>,
                            const std::vector<Tensor> &, BackwardFn);

  std::shared_ptr<Node> node_;
};

// Creates the output of an operation. The graph edge and backward function
// are recorded only when some input requires a gradient.
Tensor make_result(Shape shape, std::vector<double> values,
                   const std::vector<Tensor> &inputs, BackwardFn backward);

// Reverse-mode pass from a scalar. Interior gradients are recomputed on
// every call; leaf gradients accumulate until zeroed. Throws ShapeError
// for non-scalar input.
void backward(const Tensor &loss);

// Throws ShapeError naming `op` and both shapes when they differ.
void require_same_shape(const char *op, const Tensor &a, const Tensor &b);
void require_rank(const char *op, const Tensor &t, int rank);

}  // namespace tev

#endif  // TEV_TENSOR_H_
