#pragma once

#include <string>
#include <vector>

#include "rmix/tensor.hpp"

namespace rmix {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment buffers for one parameter tensor.
struct AdamSlot {
  Tensor m;
  Tensor v;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  int64_t step_count() const { return t_; }

  // Applies one update to every (param, grad) pair. Slots are created lazily
  // on first use and matched positionally, so the parameter list must keep a
  // stable order across steps. Throws on non-finite gradients, naming the
  // offending parameter.
  void step(const std::vector<std::pair<Tensor*, const Tensor*>>& params,
            const std::vector<std::string>& names);

 private:
  AdamConfig cfg_;
  std::vector<AdamSlot> slots_;
  int64_t t_ = 0;
};

}  // namespace rmix
