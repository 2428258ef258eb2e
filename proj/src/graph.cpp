#include "rmix/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rmix {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.shape_str() +
                              " and " + b.shape_str());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a) {
  throw std::invalid_argument(std::string(op) + ": unsupported shape " + a.shape_str());
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Rows with norm below this are treated as the zero vector; their
// normalization and gradient are defined to be zero.
constexpr double kZeroNormGuard = 1e-150;

}  // namespace

int Graph::check(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("Graph: invalid Var handle");
  return v.id;
}

bool Graph::any_requires(const std::vector<int>& parents) const {
  for (int p : parents)
    if (nodes_[p].requires_grad) return true;
  return false;
}

Var Graph::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::emit(Tensor value, std::vector<int> parents, const char* op,
                std::function<void(Graph&, int)> backprop) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.op = op;
  n.requires_grad = any_requires(n.parents);
  if (n.requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Graph::grad(Var v) const {
  const int id = check(v);
  if (!has_grads_) throw std::logic_error("Graph::grad before backward()");
  return nodes_[id].grad;
}

Var Graph::matmul(Var va, Var vb) {
  const int a = check(va), b = check(vb);
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows()) shape_error("matmul", A, B);
  const int m = A.rows(), k = A.cols(), n = B.cols();
  Tensor C({m, n});
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double aip = A.at(i, p);
      if (aip == 0.0) continue;
      for (int j = 0; j < n; ++j) C.at(i, j) += aip * B.at(p, j);
    }
  return emit(std::move(C), {a, b}, "matmul", [a, b, m, k, n](Graph& g, int self) {
    const Tensor& G = g.grad_buf(self);
    const Tensor& A = g.val(a);
    const Tensor& B = g.val(b);
    if (g.nodes_[a].requires_grad) {
      Tensor& dA = g.grad_buf(a);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          const double gij = G.at(i, j);
          if (gij == 0.0) continue;
          for (int p = 0; p < k; ++p) dA.at(i, p) += gij * B.at(p, j);
        }
    }
    if (g.nodes_[b].requires_grad) {
      Tensor& dB = g.grad_buf(b);
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          const double aip = A.at(i, p);
          if (aip == 0.0) continue;
          for (int j = 0; j < n; ++j) dB.at(p, j) += aip * G.at(i, j);
        }
    }
  });
}

Var Graph::add(Var va, Var vb) {
  const int a = check(va), b = check(vb);
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.same_shape(B)) {
    Tensor C = A;
    for (int64_t i = 0; i < C.numel(); ++i) C.at(i) += B.at(i);
    return emit(std::move(C), {a, b}, "add", [a, b](Graph& g, int self) {
      const Tensor& G = g.grad_buf(self);
      if (g.nodes_[a].requires_grad) {
        Tensor& dA = g.grad_buf(a);
        for (int64_t i = 0; i < G.numel(); ++i) dA.at(i) += G.at(i);
      }
      if (g.nodes_[b].requires_grad) {
        Tensor& dB = g.grad_buf(b);
        for (int64_t i = 0; i < G.numel(); ++i) dB.at(i) += G.at(i);
      }
    });
  }
  if (A.rank() == 2 && B.rank() == 1 && A.cols() == static_cast<int>(B.numel())) {
    const int m = A.rows(), n = A.cols();
    Tensor C = A;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) C.at(i, j) += B.at(j);
    return emit(std::move(C), {a, b}, "add", [a, b, m, n](Graph& g, int self) {
      const Tensor& G = g.grad_buf(self);
      if (g.nodes_[a].requires_grad) {
        Tensor& dA = g.grad_buf(a);
        for (int64_t i = 0; i < G.numel(); ++i) dA.at(i) += G.at(i);
      }
      if (g.nodes_[b].requires_grad) {
        Tensor& dB = g.grad_buf(b);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) dB.at(j) += G.at(i, j);
      }
    });
  }
  shape_error("add", A, B);
}

Var Graph::sub(Var va, Var vb) { return add(va, smul(vb, -1.0)); }

Var Graph::mul(Var va, Var vb) {
  const int a = check(va), b = check(vb);
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (!A.same_shape(B)) shape_error("mul", A, B);
  Tensor C = A;
  for (int64_t i = 0; i < C.numel(); ++i) C.at(i) *= B.at(i);
  return emit(std::move(C), {a, b}, "mul", [a, b](Graph& g, int self) {
    const Tensor& G = g.grad_buf(self);
    const Tensor& A = g.val(a);
    const Tensor& B = g.val(b);
    if (g.nodes_[a].requires_grad) {
      Tensor& dA = g.grad_buf(a);
      for (int64_t i = 0; i < G.numel(); ++i) dA.at(i) += G.at(i) * B.at(i);
    }
    if (g.nodes_[b].requires_grad) {
      Tensor& dB = g.grad_buf(b);
      for (int64_t i = 0; i < G.numel(); ++i) dB.at(i) += G.at(i) * A.at(i);
    }
  });
}

Var Graph::smul(Var va, double c) {
  const int a = check(va);
  Tensor C = val(a);
  for (auto& x : C.data()) x *= c;
  return emit(std::move(C), {a}, "smul", [a, c](Graph& g, int self) {
    const Tensor& G = g.grad_buf(self);
    Tensor& dA = g.grad_buf(a);
    for (int64_t i = 0; i < G.numel(); ++i) dA.at(i) += c * G.at(i);
  });
}

Var Graph::relu(Var va) {
  const int a = check(va);
  Tensor C = val(a);
  for (auto& x : C.data()) x = x > 0.0 ? x : 0.0;
  return emit(std::move(C), {a}, "relu", [a](Graph& g, int self) {
    const Tensor& G = g.grad_buf(self);
    const Tensor& A = g.val(a);
    Tensor& dA = g.grad_buf(a);
    for (int64_t i = 0; i < G.numel(); ++i)
      if (A.at(i) > 0.0) dA.at(i) += G.at(i);
  });
}

Var Graph::tanh(Var va) {
  const int a = check(va);
  Tensor C = val(a);
  for (auto& x : C.data()) x = std::tanh(x);
  return emit(std::move(C), {a}, "tanh", [a](Graph& g, int self) {
    const Tensor& G = g.grad_buf(self);
    const Tensor& Y = g.val(self);
    Tensor& dA = g.grad_buf(a);
    for (int64_t i = 0; i < G.numel(); ++i) dA.at(i) += G.at(i) * (1.0 - Y.at(i) * Y.at(i));
  });
}

Var Graph::sigmoid(Var va) {
  const int a = check(va);
  Tensor C = val(a);
  for (auto& x : C.data()) x = stable_sigmoid(x);
  return emit(std::move(C), {a}, "sigmoid", [a](Graph& g, int self) {
    const Tensor& G = g.grad_buf(self);
    const Tensor& Y = g.val(self);
    Tensor& dA = g.grad_buf(a);
    for (int64_t i = 0; i < G.numel(); ++i) dA.at(i) += G.at(i) * Y.at(i) * (1.0 - Y.at(i));
  });
}

Var Graph::log(Var va) {
  const int a = check(va);
  Tensor C = val(a);
  for (auto& x : C.data()) x = std::log(x);
  return emit(std::move(C), {a}, "log", [a](Graph& g, int self) {
    const Tensor& G = g.grad_buf(self);
    const Tensor& A = g.val(a);
    Tensor& dA = g.grad_buf(a);
    for (int64_t i = 0; i < G.numel(); ++i) dA.at(i) += G.at(i) / A.at(i);
  });
}

Var Graph::sqrt(Var va) {
  const int a = check(va);
  Tensor C = val(a);
  for (auto& x : C.data()) x = std::sqrt(x);
  return emit(std::move(C), {a}, "sqrt", [a](Graph& g, int self) {
    const Tensor& G = g.grad_buf(self);
    const Tensor& C = g.val(self);
    Tensor& dA = g.grad_buf(a);
    for (int64_t i = 0; i < G.numel(); ++i)
      if (C.at(i) > 0.0) dA.at(i) += G.at(i) / (2.0 * C.at(i));
  });
}

Var Graph::cmax(Var va, double lo) {
  const int a = check(va);
  Tensor C = val(a);
  for (auto& x : C.data()) x = x > lo ? x : lo;
  return emit(std::move(C), {a}, "cmax", [a, lo](Graph& g, int self) {
    const Tensor& G = g.grad_buf(self);
    const Tensor& A = g.val(a);
    Tensor& dA = g.grad_buf(a);
    for (int64_t i = 0; i < G.numel(); ++i)
      if (A.at(i) > lo) dA.at(i) += G.at(i);
  });
}

Var Graph::cmin(Var va, double hi) {
  const int a = check(va);
  Tensor C = val(a);
  for (auto& x : C.data()) x = x < hi ? x : hi;
  return emit(std::move(C), {a}, "cmin", [a, hi](Graph& g, int self) {
    const Tensor& G = g.grad_buf(self);
    const Tensor& A = g.val(a);
    Tensor& dA = g.grad_buf(a);
    for (int64_t i = 0; i < G.numel(); ++i)
      if (A.at(i) < hi) dA.at(i) += G.at(i);
  });
}

Var Graph::sum(Var va) {
  const int a = check(va);
  double s = 0.0;
  for (double x : val(a).data()) s += x;
  return emit(Tensor::scalar(s), {a}, "sum", [a](Graph& g, int self) {
    const double gg = g.grad_buf(self).at(0);
    Tensor& dA = g.grad_buf(a);
    for (int64_t i = 0; i < dA.numel(); ++i) dA.at(i) += gg;
  });
}

Var Graph::mean(Var va) {
  const int a = check(va);
  const int64_t n = val(a).numel();
  return smul(sum(va), 1.0 / static_cast<double>(n));
}

Var Graph::sum_axis(Var va, int axis) {
  const int a = check(va);
  const Tensor& A = val(a);
  if (A.rank() != 2 || (axis != 0 && axis != 1)) shape_error("sum_axis", A);
  const int m = A.rows(), n = A.cols();
  Tensor C(axis == 0 ? std::vector<int>{n} : std::vector<int>{m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) C.at(axis == 0 ? j : i) += A.at(i, j);
  return emit(std::move(C), {a}, "sum_axis", [a, axis, m, n](Graph& g, int self) {
    const Tensor& G = g.grad_buf(self);
    Tensor& dA = g.grad_buf(a);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) dA.at(i, j) += G.at(axis == 0 ? j : i);
  });
}

Var Graph::mean_axis(Var va, int axis) {
  const int a = check(va);
  const Tensor& A = val(a);
  if (A.rank() != 2 || (axis != 0 && axis != 1)) shape_error("mean_axis", A);
  const double inv = 1.0 / static_cast<double>(axis == 0 ? A.rows() : A.cols());
  return smul(sum_axis(va, axis), inv);
}

Var Graph::l2norm(Var va) {
  const int a = check(va);
  const Tensor& A = val(a);
  if (A.rank() != 1) shape_error("l2norm", A);
  double s = 0.0;
  for (double x : A.data()) s += x * x;
  const double nrm = std::sqrt(s);
  return emit(Tensor::scalar(nrm), {a}, "l2norm", [a, nrm](Graph& g, int self) {
    if (nrm < kZeroNormGuard) return;  // subgradient 0 at the origin
    const double gg = g.grad_buf(self).at(0);
    const Tensor& A = g.val(a);
    Tensor& dA = g.grad_buf(a);
    for (int64_t i = 0; i < A.numel(); ++i) dA.at(i) += gg * A.at(i) / nrm;
  });
}

namespace {

void unit_rows_forward(const Tensor& A, Tensor& C, int m, int n) {
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += A.at(i * n + j) * A.at(i * n + j);
    const double nrm = std::sqrt(s);
    if (nrm < kZeroNormGuard) continue;  // zero row stays zero
    for (int j = 0; j < n; ++j) C.at(i * n + j) = A.at(i * n + j) / nrm;
  }
}

void unit_rows_backward(const Tensor& G, const Tensor& A, Tensor& dA, int m, int n) {
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += A.at(i * n + j) * A.at(i * n + j);
    const double nrm = std::sqrt(s);
    if (nrm < kZeroNormGuard) continue;
    double gu = 0.0;
    for (int j = 0; j < n; ++j) gu += G.at(i * n + j) * A.at(i * n + j) / nrm;
    for (int j = 0; j < n; ++j) {
      const double u = A.at(i * n + j) / nrm;
      dA.at(i * n + j) += (G.at(i * n + j) - gu * u) / nrm;
    }
  }
}

}  // namespace

Var Graph::unit(Var va) {
  const int a = check(va);
  const Tensor& A = val(a);
  if (A.rank() != 1) shape_error("unit", A);
  const int n = static_cast<int>(A.numel());
  Tensor C(A.shape());
  unit_rows_forward(A, C, 1, n);
  return emit(std::move(C), {a}, "unit", [a, n](Graph& g, int self) {
    unit_rows_backward(g.grad_buf(self), g.val(a), g.grad_buf(a), 1, n);
  });
}

Var Graph::unit_rows(Var va) {
  const int a = check(va);
  const Tensor& A = val(a);
  if (A.rank() != 2) shape_error("unit_rows", A);
  const int m = A.rows(), n = A.cols();
  Tensor C(A.shape());
  unit_rows_forward(A, C, m, n);
  return emit(std::move(C), {a}, "unit_rows", [a, m, n](Graph& g, int self) {
    unit_rows_backward(g.grad_buf(self), g.val(a), g.grad_buf(a), m, n);
  });
}

Var Graph::concat(Var va, Var vb) {
  const int a = check(va), b = check(vb);
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  if (A.rank() == 1 && B.rank() == 1) {
    const int p = static_cast<int>(A.numel()), q = static_cast<int>(B.numel());
    Tensor C({p + q});
    for (int i = 0; i < p; ++i) C.at(i) = A.at(i);
    for (int i = 0; i < q; ++i) C.at(p + i) = B.at(i);
    return emit(std::move(C), {a, b}, "concat", [a, b, p, q](Graph& g, int self) {
      const Tensor& G = g.grad_buf(self);
      if (g.nodes_[a].requires_grad) {
        Tensor& dA = g.grad_buf(a);
        for (int i = 0; i < p; ++i) dA.at(i) += G.at(i);
      }
      if (g.nodes_[b].requires_grad) {
        Tensor& dB = g.grad_buf(b);
        for (int i = 0; i < q; ++i) dB.at(i) += G.at(p + i);
      }
    });
  }
  if (A.rank() == 2 && B.rank() == 2 && A.rows() == B.rows()) {
    const int m = A.rows(), p = A.cols(), q = B.cols();
    Tensor C({m, p + q});
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < p; ++j) C.at(i, j) = A.at(i, j);
      for (int j = 0; j < q; ++j) C.at(i, p + j) = B.at(i, j);
    }
    return emit(std::move(C), {a, b}, "concat", [a, b, m, p, q](Graph& g, int self) {
      const Tensor& G = g.grad_buf(self);
      if (g.nodes_[a].requires_grad) {
        Tensor& dA = g.grad_buf(a);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < p; ++j) dA.at(i, j) += G.at(i, j);
      }
      if (g.nodes_[b].requires_grad) {
        Tensor& dB = g.grad_buf(b);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < q; ++j) dB.at(i, j) += G.at(i, p + j);
      }
    });
  }
  shape_error("concat", A, B);
}

Var Graph::gather_rows(Var va, std::vector<int> idx) {
  const int a = check(va);
  const Tensor& A = val(a);
  if (A.rank() != 2)
    throw std::invalid_argument("gather_rows: expected rank-2, got " + A.shape_str());
  if (idx.empty()) throw std::invalid_argument("gather_rows: empty index list");
  for (int i : idx)
    if (i < 0 || i >= A.rows())
      throw std::invalid_argument("gather_rows: index " + std::to_string(i) +
                                  " out of range for " + A.shape_str());
  const int n = static_cast<int>(idx.size()), cols = A.cols();
  Tensor C({n, cols});
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < cols; ++j) C.at(r, j) = A.at(idx[r], j);
  return emit(std::move(C), {a}, "gather_rows",
              [a, idx = std::move(idx), n, cols](Graph& g, int self) {
                const Tensor& G = g.grad_buf(self);
                Tensor& dA = g.grad_buf(a);
                for (int r = 0; r < n; ++r)
                  for (int j = 0; j < cols; ++j) dA.at(idx[r], j) += G.at(r, j);
              });
}

Var Graph::grad_reverse(Var va, double coeff) {
  const int a = check(va);
  Tensor C = val(a);
  return emit(std::move(C), {a}, "grad_reverse", [a, coeff](Graph& g, int self) {
    const Tensor& G = g.grad_buf(self);
    Tensor& dA = g.grad_buf(a);
    for (int64_t i = 0; i < G.numel(); ++i) dA.at(i) += -coeff * G.at(i);
  });
}

void Graph::backward(Var loss) {
  const int id = check(loss);
  if (!nodes_[id].value.is_scalar())
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                nodes_[id].value.shape_str());
  for (auto& n : nodes_) n.grad = Tensor::zeros(n.value.shape());
  has_grads_ = true;
  nodes_[id].grad.at(0) = 1.0;
  for (int i = id; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (!n.requires_grad || !n.backprop) continue;
    n.backprop(*this, i);
  }
}

}  // namespace rmix
