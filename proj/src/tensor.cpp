#include "rmix/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rmix {

namespace {
int64_t checked_numel(const std::vector<int>& shape) {
  if (shape.empty()) throw std::invalid_argument("Tensor: empty shape");
  int64_t n = 1;
  for (int d : shape) {
    if (d < 1) throw std::invalid_argument("Tensor: shape dimension < 1 in " + shape_str(shape));
    n *= d;
  }
  return n;
}
}  // namespace

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  const int64_t n = checked_numel(shape_);
  if (n != static_cast<int64_t>(data_.size()))
    throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                " does not match shape " + rmix::shape_str(shape_));
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(checked_numel(shape_)), 0.0);
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  for (auto& x : t.data_) x = v;
  return t;
}

Tensor Tensor::identity(int n) {
  Tensor t({n, n});
  for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

Tensor Tensor::uniform(std::vector<int> shape, double lo, double hi, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& x : t.data_) x = lo + (hi - lo) * rng.uniform();
  return t;
}

Tensor Tensor::gaussian(std::vector<int> shape, double mean, double sigma, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& x : t.data_) x = rng.normal(mean, sigma);
  return t;
}

int Tensor::rows() const {
  if (rank() != 2) throw std::invalid_argument("Tensor::rows on non-matrix " + shape_str());
  return shape_[0];
}

int Tensor::cols() const {
  if (rank() != 2) throw std::invalid_argument("Tensor::cols on non-matrix " + shape_str());
  return shape_[1];
}

double Tensor::item() const {
  if (!is_scalar()) throw std::invalid_argument("Tensor::item on non-scalar " + shape_str());
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const { return rmix::shape_str(shape_); }

}  // namespace rmix
