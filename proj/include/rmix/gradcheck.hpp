#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rmix/graph.hpp"
#include "rmix/tensor.hpp"

namespace rmix {

// Builds a scalar loss over freshly created leaves for the given inputs.
// The builder must register one leaf per input tensor, in order, and return
// the loss Var together with the leaf handles.
struct GradCheckProblem {
  std::function<Var(Graph&, const std::vector<Var>&)> build;
  std::vector<Tensor> inputs;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  int worst_input = -1;
  int64_t worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central finite differences against the tape gradient.
// rel error = |a - n| / max(1, |a|, |n|).
GradCheckReport grad_check(const GradCheckProblem& problem, double eps = 1e-5);

}  // namespace rmix
