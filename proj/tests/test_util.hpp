#ifndef RMIX_TESTS_TEST_UTIL_HPP_
#define RMIX_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <vector>

#include "rmix/rng.hpp"
#include "rmix/tensor.hpp"

namespace rmixtest {

inline rmix::Tensor rnd(std::vector<int> shape, rmix::Rng& rng, double lo = -1.0,
                        double hi = 1.0) {
  return rmix::Tensor::uniform(std::move(shape), lo, hi, rng);
}

// Uniform draw with every coordinate at least `margin` away from each kink.
inline rmix::Tensor rnd_away(std::vector<int> shape, rmix::Rng& rng,
                             const std::vector<double>& kinks, double margin,
                             double lo = -1.0, double hi = 1.0) {
  rmix::Tensor t(std::move(shape));
  for (auto& x : t.data()) {
    for (;;) {
      const double v = lo + (hi - lo) * rng.uniform();
      bool clear = true;
      for (double k : kinks)
        if (std::fabs(v - k) < margin) clear = false;
      if (clear) {
        x = v;
        break;
      }
    }
  }
  return t;
}

// Random vector bounded away from the origin, for norm/unit gradients.
inline rmix::Tensor rnd_nonzero(std::vector<int> shape, rmix::Rng& rng,
                                double min_norm = 0.5) {
  for (;;) {
    rmix::Tensor t = rnd(shape, rng);
    double s = 0.0;
    for (double v : t.data()) s += v * v;
    if (std::sqrt(s) >= min_norm) return t;
  }
}

// Rank-2 tensor whose every row is bounded away from the origin.
inline rmix::Tensor rnd_rows_nonzero(int m, int n, rmix::Rng& rng, double min_norm = 0.5) {
  rmix::Tensor t({m, n});
  for (int i = 0; i < m; ++i) {
    rmix::Tensor row = rnd_nonzero({n}, rng, min_norm);
    for (int j = 0; j < n; ++j) t.at(i, j) = row.at(j);
  }
  return t;
}

inline double max_abs_diff(const rmix::Tensor& a, const rmix::Tensor& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a.at(static_cast<int>(i)) - b.at(static_cast<int>(i))));
  return m;
}

}  // namespace rmixtest

#endif  // RMIX_TESTS_TEST_UTIL_HPP_
