#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "scone/matrix.hpp"

// Reverse-mode differentiation over a tape that is rebuilt for every
// forward pass. Nodes are appended in evaluation order, so the tape order is
// a topological order and backward() is a single reverse sweep.
namespace scone::ad {

// A trainable matrix. Gradients from every use on a tape are summed into
// `grad` by Tape::backward.
struct Parameter {
  Parameter() = default;
  explicit Parameter(Matrix v) : value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad = Matrix(value.rows(), value.cols()); }

  Matrix value;
  Matrix grad;
};

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  // A tape with gradients disabled records values only; parameters enter as
  // constants and no closures are kept.
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // A leaf whose gradient is kept after backward() (see grad()).
  Var variable(Matrix value);
  Var parameter(Parameter& p);
  Var record(Matrix value, std::initializer_list<Var> parents, Backward backward);
  Var record(Matrix value, std::span<const Var> parents, Backward backward);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  // Gradient of a leaf created with variable() after backward(); zeros if
  // no gradient reached it.
  Matrix grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  bool grad_enabled() const noexcept { return grad_enabled_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Adds g into the gradient slot of v (no-op if v does not require grad).
  void accumulate(Var v, const Matrix& g);
  void accumulate(Var v, Matrix&& g);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. Interior
  // gradients are released as soon as they have been propagated; parameter
  // gradients are added into Parameter::grad.
  void backward(Var loss);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool keep_grad = false;
    bool has_grad = false;
    Parameter* param = nullptr;
    Backward backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool grad_enabled_;
};

// Differentiable operations. All of them validate shapes and throw
// DimensionError on mismatch.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // element-wise
Var scale(Var a, double s);
Var leaky_relu(Var a, double slope);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var gather_rows(Var a, std::span<const std::size_t> rows);
// out has `out_rows` rows; out[index[r]] += a[r].
Var scatter_add_rows(Var a, std::span<const std::size_t> index, std::size_t out_rows);
Var concat_rows(Var a, Var b);
Var sum(Var a);
Var mean(Var a);
// (n x d), (n x d) -> (n x 1) of row-wise inner products.
Var rowwise_dot(Var a, Var b);
// Mean squared difference over all entries -> 1x1.
Var mse(Var a, Var b);
// Mean binary cross-entropy of logits against targets in [0, 1] -> 1x1.
Var bce_with_logits(Var logits, const Matrix& targets);

// Numerically stable scalar helpers shared by the losses and their oracles.
double sigmoid(double x) noexcept;
double log_sigmoid(double x) noexcept;

}  // namespace scone::ad
