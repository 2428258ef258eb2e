#include "rmix/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace rmix {

void Adam::step(const std::vector<std::pair<Tensor*, const Tensor*>>& params,
                const std::vector<std::string>& names) {
  if (params.size() != names.size())
    throw std::invalid_argument("Adam::step: params/names size mismatch");
  if (slots_.empty()) {
    slots_.reserve(params.size());
    for (const auto& [p, g] : params) slots_.push_back({Tensor::zeros(p->shape()), Tensor::zeros(p->shape())});
  }
  if (slots_.size() != params.size())
    throw std::invalid_argument("Adam::step: parameter count changed between steps");

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

  for (size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k].first;
    const Tensor& g = *params[k].second;
    if (!p.same_shape(g))
      throw std::invalid_argument("Adam::step: grad shape mismatch for " + names[k]);
    if (!g.all_finite())
      throw std::runtime_error("Adam::step: non-finite gradient in " + names[k]);
    AdamSlot& s = slots_[k];
    for (int64_t i = 0; i < p.numel(); ++i) {
      const double gi = g.at(i);
      s.m.at(i) = cfg_.beta1 * s.m.at(i) + (1.0 - cfg_.beta1) * gi;
      s.v.at(i) = cfg_.beta2 * s.v.at(i) + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = s.m.at(i) / bc1;
      const double vhat = s.v.at(i) / bc2;
      p.at(i) -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace rmix
