#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

// Minimal reverse-mode autodiff over dense double tensors.
// Backward functions build graph nodes themselves, so gradients are
// differentiable and second-order terms (e.g. R1) come for free.

namespace s2d {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

struct Node;
using NodePtr = std::shared_ptr<Node>;

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  std::vector<double>& data();
  const std::vector<double>& data() const;
  double item() const;
  bool requires_grad() const;

  // Leaf copy of the same values, cut off from the graph.
  Tensor detach() const;

  Node* node() const { return node_.get(); }
  const NodePtr& node_ptr() const { return node_; }

 private:
  NodePtr node_;
};

// backward(g, self) -> per-parent gradients (same order as parents).
using BackwardFn =
    std::function<std::vector<Tensor>(const Tensor& g, const Tensor& self)>;

struct Node {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  BackwardFn backward;
  const char* op = "leaf";
};

// ---- factories ----
Tensor zeros(const Shape& s);
Tensor full(const Shape& s, double v);
Tensor scalar(double v);
Tensor from_vector(std::vector<double> v, const Shape& s);
Tensor leaf(std::vector<double> v, const Shape& s, bool requires_grad);

// ---- elementwise (numpy-style broadcasting on binary ops) ----
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a);
Tensor operator+(const Tensor& a, double b);
Tensor operator-(const Tensor& a, double b);
Tensor operator*(const Tensor& a, double b);
Tensor operator/(const Tensor& a, double b);
Tensor operator+(double a, const Tensor& b);
Tensor operator-(double a, const Tensor& b);
Tensor operator*(double a, const Tensor& b);

Tensor exp(const Tensor& t);
Tensor log(const Tensor& t);
Tensor sqrt(const Tensor& t);
Tensor abs(const Tensor& t);
Tensor square(const Tensor& t);
Tensor softplus(const Tensor& t);
Tensor sigmoid(const Tensor& t);
Tensor tanh(const Tensor& t);
Tensor leaky_relu(const Tensor& t, double alpha = 0.2);
Tensor clamp(const Tensor& t, double lo, double hi);

// ---- shape / layout ----
Tensor reshape(const Tensor& t, const Shape& s);
Tensor broadcast_to(const Tensor& t, const Shape& s);
Tensor reduce_to(const Tensor& t, const Shape& s);  // sum over broadcast dims
Tensor transpose(const Tensor& t);                  // 2-D only
Tensor concat0(const std::vector<Tensor>& parts);
Tensor slice0(const Tensor& t, std::size_t start, std::size_t len);
Tensor slice_cols(const Tensor& t, std::size_t start, std::size_t len);  // 2-D

// ---- reductions ----
Tensor sum(const Tensor& t);
Tensor mean(const Tensor& t);
Tensor sum_axis(const Tensor& t, std::size_t axis);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);

// ---- scans ----
Tensor cumsum_last(const Tensor& t, bool exclusive, bool reverse);

// ---- sparse linear maps (gather/scatter, im2col, interpolation, ...) ----
struct LinearPlan {
  std::size_t in_size = 0;
  std::size_t out_size = 0;
  // CSR over output entries
  std::vector<std::uint32_t> offsets;  // out_size + 1
  std::vector<std::uint32_t> index;
  std::vector<double> weight;

  const LinearPlan& transposed() const;

 private:
  mutable std::shared_ptr<LinearPlan> transpose_;
};

using PlanPtr = std::shared_ptr<const LinearPlan>;

struct PlanBuilder {
  explicit PlanBuilder(std::size_t in_size);
  void begin_row();
  void tap(std::size_t idx, double w);
  PlanPtr finish();

 private:
  std::shared_ptr<LinearPlan> plan_;
};

// Applies the plan along the last axis; leading axes are batched.
Tensor apply_plan(const Tensor& t, PlanPtr plan, bool transposed = false);

// ---- autodiff ----
// d(output)/d(wrt); output must be a scalar. Returned tensors are graph
// tensors, so they can be differentiated again.
std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& wrt);

}  // namespace s2d
