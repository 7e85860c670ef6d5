#include "scone/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "scone/error.hpp"

namespace scone::ad {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
  }
}

Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw ContractError("variable is not attached to a tape");
  return *a.tape;
}

Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape) throw ContractError("variables belong to different tapes");
  return tape_of(a);
}

}  // namespace

const Matrix& Var::value() const { return tape_of(*this).value(*this); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = grad_enabled_;
  n.keep_grad = true;
  return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.value = p.value;
  if (grad_enabled_) {
    n.requires_grad = true;
    n.keep_grad = true;
    n.param = &p;
  }
  return push(std::move(n));
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backward backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> parents, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (Var p : parents) {
      if (p.tape != this) throw ContractError("parent variable belongs to a different tape");
      n.requires_grad = n.requires_grad || nodes_[p.id].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  return push(std::move(n));
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.has_grad) return n.grad;
  return Matrix(n.value.rows(), n.value.cols());
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id];
  if (!n.requires_grad) return;
  require_same_shape(n.value, g, "gradient accumulation");
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

void Tape::accumulate(Var v, Matrix&& g) {
  Node& n = nodes_[v.id];
  if (!n.requires_grad) return;
  require_same_shape(n.value, g, "gradient accumulation");
  if (!n.has_grad) {
    n.grad = std::move(g);
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward: loss belongs to a different tape");
  const Node& root = nodes_[loss.id];
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ContractError("backward: loss must be 1x1, got " + root.value.shape_string());
  }
  if (!grad_enabled_) throw ContractError("backward: tape was built with gradients disabled");
  if (!root.requires_grad) return;
  accumulate(loss, Matrix(1, 1, 1.0));

  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.backward) {
      Matrix g = std::move(n.grad);
      n.has_grad = false;
      n.backward(*this, g);
      n.backward = nullptr;
    }
    if (n.param != nullptr && n.has_grad) n.param->grad += n.grad;
    if (!n.keep_grad) {
      n.grad = Matrix();
      n.has_grad = false;
    }
  }
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Matrix out = scone::matmul(a.value(), b.value());
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, matmul_nt(g, t.value(b)));
    if (t.requires_grad(b)) t.accumulate(b, matmul_tn(t.value(a), g));
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  return t.record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  return t.record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g * -1.0);
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require_same_shape(av, bv, "mul");
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = av.data()[i] * bv.data()[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    if (t.requires_grad(a)) {
      Matrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] = g.data()[i] * bv.data()[i];
      t.accumulate(a, std::move(ga));
    }
    if (t.requires_grad(b)) {
      Matrix gb(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] = g.data()[i] * av.data()[i];
      t.accumulate(b, std::move(gb));
    }
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  return t.record(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var leaky_relu(Var a, double slope) {
  Tape& t = tape_of(a);
  Matrix out = a.value();
  for (double& v : out.values()) v = v > 0.0 ? v : slope * v;
  return t.record(std::move(out), {a}, [a, slope](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(a);
    Matrix ga(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i)
      ga.data()[i] = x.data()[i] > 0.0 ? g.data()[i] : slope * g.data()[i];
    t.accumulate(a, std::move(ga));
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  Tape& t = tape_of(a);
  const Matrix& av = a.value();
  if (begin + count > av.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") of " + av.shape_string());
  }
  Matrix out(count, av.cols());
  if (!out.empty()) std::memcpy(out.data(), av.row(begin).data(), out.size() * sizeof(double));
  return t.record(std::move(out), {a}, [a, begin](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a);
    Matrix ga(av.rows(), av.cols());
    if (!g.empty()) std::memcpy(ga.row(begin).data(), g.data(), g.size() * sizeof(double));
    t.accumulate(a, std::move(ga));
  });
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
  Tape& t = tape_of(a);
  Matrix out = select_rows(a.value(), rows);
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return t.record(std::move(out), {a}, [a, idx = std::move(idx)](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a);
    Matrix ga(av.rows(), av.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto src = g.row(r);
      auto dst = ga.row(idx[r]);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
    t.accumulate(a, std::move(ga));
  });
}

Var scatter_add_rows(Var a, std::span<const std::size_t> index, std::size_t out_rows) {
  Tape& t = tape_of(a);
  const Matrix& av = a.value();
  if (index.size() != av.rows()) {
    throw DimensionError("scatter_add_rows: " + std::to_string(index.size()) +
                         " indices for " + av.shape_string());
  }
  Matrix out(out_rows, av.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= out_rows) throw DimensionError("scatter_add_rows: index out of range");
    auto src = av.row(r);
    auto dst = out.row(index[r]);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return t.record(std::move(out), {a}, [a, idx = std::move(idx)](Tape& t, const Matrix& g) {
    t.accumulate(a, select_rows(g, idx));
  });
}

Var concat_rows(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.cols()) {
    throw DimensionError("concat_rows: " + av.shape_string() + " and " + bv.shape_string());
  }
  Matrix out(av.rows() + bv.rows(), av.cols());
  std::copy(av.values().begin(), av.values().end(), out.data());
  std::copy(bv.values().begin(), bv.values().end(), out.data() + av.size());
  const std::size_t split = av.rows();
  return t.record(std::move(out), {a, b}, [a, b, split](Tape& t, const Matrix& g) {
    const std::size_t cols = g.cols();
    if (t.requires_grad(a))
      t.accumulate(a, Matrix::from_data(split, cols, {g.data(), split * cols}));
    if (t.requires_grad(b))
      t.accumulate(b, Matrix::from_data(g.rows() - split, cols,
                                        {g.data() + split * cols, g.size() - split * cols}));
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  return t.record(Matrix(1, 1, scone::sum(a.value())), {a}, [a](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a);
    t.accumulate(a, Matrix(av.rows(), av.cols(), g(0, 0)));
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw DimensionError("mean: empty matrix");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var rowwise_dot(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require_same_shape(av, bv, "rowwise_dot");
  Matrix out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    auto x = av.row(r);
    auto y = bv.row(r);
    for (std::size_t c = 0; c < x.size(); ++c) s += x[c] * y[c];
    out(r, 0) = s;
  }
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    Matrix ga(av.rows(), av.cols());
    Matrix gb(bv.rows(), bv.cols());
    for (std::size_t r = 0; r < av.rows(); ++r) {
      const double gr = g(r, 0);
      for (std::size_t c = 0; c < av.cols(); ++c) {
        ga(r, c) = gr * bv(r, c);
        gb(r, c) = gr * av(r, c);
      }
    }
    t.accumulate(a, std::move(ga));
    t.accumulate(b, std::move(gb));
  });
}

Var mse(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require_same_shape(av, bv, "mse");
  if (av.empty()) throw DimensionError("mse: empty matrices");
  const double inv_n = 1.0 / static_cast<double>(av.size());
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av.data()[i] - bv.data()[i];
    s += d * d;
  }
  return t.record(Matrix(1, 1, s * inv_n), {a, b}, [a, b, inv_n](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    Matrix ga(av.rows(), av.cols());
    const double k = 2.0 * inv_n * g(0, 0);
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] = k * (av.data()[i] - bv.data()[i]);
    if (t.requires_grad(b)) t.accumulate(b, ga * -1.0);
    t.accumulate(a, std::move(ga));
  });
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) noexcept {
  // log(sigma(x)) = -softplus(-x)
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

Var bce_with_logits(Var logits, const Matrix& targets) {
  Tape& t = tape_of(logits);
  const Matrix& x = logits.value();
  require_same_shape(x, targets, "bce_with_logits");
  if (x.empty()) throw DimensionError("bce_with_logits: empty matrices");
  for (double p : targets.values()) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("bce_with_logits: target outside [0, 1]");
  }
  const double inv_n = 1.0 / static_cast<double>(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    const double p = targets.data()[i];
    // -(p log s(v) + (1-p) log(1 - s(v))) with log(1 - s(v)) = log s(-v)
    s -= p * log_sigmoid(v) + (1.0 - p) * log_sigmoid(-v);
  }
  return t.record(Matrix(1, 1, s * inv_n), {logits},
                  [logits, targets, inv_n](Tape& t, const Matrix& g) {
                    const Matrix& x = t.value(logits);
                    Matrix gx(x.rows(), x.cols());
                    const double k = inv_n * g(0, 0);
                    for (std::size_t i = 0; i < gx.size(); ++i)
                      gx.data()[i] = k * (sigmoid(x.data()[i]) - targets.data()[i]);
                    t.accumulate(logits, std::move(gx));
                  });
}

}  // namespace scone::ad
