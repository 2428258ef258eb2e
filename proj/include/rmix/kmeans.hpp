#ifndef RMIX_KMEANS_HPP_
#define RMIX_KMEANS_HPP_

#include <cstdint>
#include <vector>

#include "rmix/tensor.hpp"

namespace rmix {

struct KMeansResult {
  std::vector<int> assignment;             // per input row
  Tensor centroids;                        // {k, d}
  std::vector<double> distortion_history;  // inertia after each update step
  int iterations = 0;
  double distortion() const { return distortion_history.back(); }
};

// Deterministic farthest-point seeding: first centroid uniform from the rows,
// each next one the row maximizing the distance to the chosen set (ties to the
// lowest row index).
Tensor farthest_point_init(const Tensor& points, int k, uint64_t seed);

// Lloyd's algorithm from farthest_point_init. Assignment ties go to the lowest
// centroid index; a cluster left empty keeps its previous centroid. Stops at an
// assignment fixpoint or after max_iters.
KMeansResult kmeans(const Tensor& points, int k, int max_iters, uint64_t seed);

}  // namespace rmix

#endif  // RMIX_KMEANS_HPP_
