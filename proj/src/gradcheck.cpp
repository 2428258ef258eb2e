#include "rmix/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rmix {

namespace {

double eval_loss(const GradCheckProblem& problem, const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<Var> leaves;
  leaves.reserve(inputs.size());
  for (const auto& t : inputs) leaves.push_back(g.leaf(t, false));
  Var loss = problem.build(g, leaves);
  return g.value(loss).item();
}

}  // namespace

GradCheckReport grad_check(const GradCheckProblem& problem, double eps) {
  if (eps < 1e-7 || eps > 1e-3)
    throw std::invalid_argument("grad_check: eps outside [1e-7, 1e-3]");

  Graph g;
  std::vector<Var> leaves;
  leaves.reserve(problem.inputs.size());
  for (const auto& t : problem.inputs) leaves.push_back(g.leaf(t, true));
  Var loss = problem.build(g, leaves);
  g.backward(loss);

  GradCheckReport rep;
  std::vector<Tensor> probe = problem.inputs;
  for (size_t k = 0; k < probe.size(); ++k) {
    const Tensor& analytic = g.grad(leaves[k]);
    for (int64_t i = 0; i < probe[k].numel(); ++i) {
      const double x0 = probe[k].at(i);
      probe[k].at(i) = x0 + eps;
      const double fp = eval_loss(problem, probe);
      probe[k].at(i) = x0 - eps;
      const double fm = eval_loss(problem, probe);
      probe[k].at(i) = x0;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic.at(i);
      const double denom = std::max({1.0, std::fabs(a), std::fabs(numeric)});
      const double rel = std::fabs(a - numeric) / denom;
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.worst_input = static_cast<int>(k);
        rep.worst_index = i;
        rep.analytic = a;
        rep.numeric = numeric;
      }
    }
  }
  return rep;
}

}  // namespace rmix
