#ifndef RMIX_GRAPH_HPP_
#define RMIX_GRAPH_HPP_

#include <functional>
#include <vector>

#include "rmix/tensor.hpp"

namespace rmix {

// Handle to a node in a Graph. Only valid for the graph that created it.
struct Var {
  int id = -1;
};

// Reverse-mode tape. Nodes are appended in execution order, which is by
// construction a topological order, so backward() is a single reverse sweep.
// A Graph lives for one forward/backward pass; parameters are owned outside
// and copied in as leaves.
class Graph {
 public:
  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  const Tensor& value(Var v) const { return nodes_[check(v)].value; }
  // Valid after backward(); zero tensor for nodes the loss does not reach.
  const Tensor& grad(Var v) const;

  // --- primitives -------------------------------------------------------
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);  // equal shapes, or {m,n} + {n} broadcast over rows
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise, equal shapes
  Var smul(Var a, double c);
  Var neg(Var a) { return smul(a, -1.0); }
  Var relu(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var log(Var a);
  Var sqrt(Var a);  // elementwise; zero input gets zero gradient
  Var cmax(Var a, double lo);  // clamp to minimum; subgradient 0 at the kink
  Var cmin(Var a, double hi);  // clamp to maximum
  Var clamp(Var a, double lo, double hi) { return cmin(cmax(a, lo), hi); }
  Var sum(Var a);   // all elements -> scalar
  Var mean(Var a);  // all elements -> scalar
  Var sum_axis(Var a, int axis);   // rank-2; axis 0 -> {cols}, axis 1 -> {rows}
  Var mean_axis(Var a, int axis);  // rank-2
  Var l2norm(Var a);               // rank-1 -> scalar; zero vector has zero gradient
  Var unit(Var a);                 // rank-1; zero vector maps to zero
  Var unit_rows(Var a);            // rank-2; zero rows map to zero
  Var concat(Var a, Var b);        // rank-1 end-to-end, or rank-2 along columns
  Var gather_rows(Var a, std::vector<int> idx);  // rank-2 row selection, repeats allowed
  // Identity forward; backward multiplies the incoming gradient by -coeff.
  Var grad_reverse(Var a, double coeff);

  // Accumulates gradients of `loss` (a scalar) into every node. Gradients of
  // leaves the loss does not reach stay zero.
  void backward(Var loss);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<int> parents;
    std::function<void(Graph&, int)> backprop;  // reads grad of node, accumulates into parents
    const char* op = "leaf";
    bool requires_grad = false;
  };

  int check(Var v) const;
  Var emit(Tensor value, std::vector<int> parents, const char* op,
           std::function<void(Graph&, int)> backprop);
  bool any_requires(const std::vector<int>& parents) const;

  Tensor& grad_buf(int id) { return nodes_[id].grad; }
  const Tensor& val(int id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
  bool has_grads_ = false;
};

}  // namespace rmix

#endif  // RMIX_GRAPH_HPP_
