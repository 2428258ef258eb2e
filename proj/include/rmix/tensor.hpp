#ifndef RMIX_TENSOR_HPP_
#define RMIX_TENSOR_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "rmix/rng.hpp"

namespace rmix {

// Dense row-major array of doubles. Rank 1 covers vectors and scalars
// (shape {1}); rank 2 covers batches and weight matrices.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<int> shape, std::vector<double> data);
  explicit Tensor(std::vector<int> shape);  // zero-filled

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double v);
  static Tensor identity(int n);
  static Tensor uniform(std::vector<int> shape, double lo, double hi, Rng& rng);
  static Tensor gaussian(std::vector<int> shape, double mean, double sigma, Rng& rng);

  const std::vector<int>& shape() const { return shape_; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool is_scalar() const { return data_.size() == 1; }
  int rows() const;  // rank-2 only
  int cols() const;

  double& at(int i) { return data_[i]; }
  double at(int i) const { return data_[i]; }
  double& at(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
  double at(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }

  double item() const;  // scalar value; throws if numel != 1

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::string shape_str(const std::vector<int>& shape);

}  // namespace rmix

#endif  // RMIX_TENSOR_HPP_
