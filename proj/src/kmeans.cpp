#include "rmix/kmeans.hpp"

#include <limits>
#include <stdexcept>
#include <string>

#include "rmix/rng.hpp"

namespace rmix {

namespace {

double dist2(const Tensor& a, int i, const Tensor& b, int j) {
  const int d = a.cols();
  double s = 0.0;
  for (int c = 0; c < d; ++c) {
    const double diff = a.at(i, c) - b.at(j, c);
    s += diff * diff;
  }
  return s;
}

}  // namespace

Tensor farthest_point_init(const Tensor& points, int k, uint64_t seed) {
  const int n = points.rows();
  if (k < 1 || k > n)
    throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(n) + "]");
  const int d = points.cols();
  Tensor centroids({k, d});
  Rng rng(seed);
  int first = rng.uniform_int(n);
  for (int c = 0; c < d; ++c) centroids.at(0, c) = points.at(first, c);

  std::vector<double> mind(n);
  for (int i = 0; i < n; ++i) mind[i] = dist2(points, i, centroids, 0);
  for (int j = 1; j < k; ++j) {
    int far = 0;
    for (int i = 1; i < n; ++i)
      if (mind[i] > mind[far]) far = i;
    for (int c = 0; c < d; ++c) centroids.at(j, c) = points.at(far, c);
    for (int i = 0; i < n; ++i) mind[i] = std::min(mind[i], dist2(points, i, centroids, j));
  }
  return centroids;
}

KMeansResult kmeans(const Tensor& points, int k, int max_iters, uint64_t seed) {
  if (points.rank() != 2) throw std::invalid_argument("kmeans: points must be rank 2");
  if (max_iters < 1) throw std::invalid_argument("kmeans: max_iters must be >= 1");
  const int n = points.rows(), d = points.cols();

  KMeansResult res;
  res.centroids = farthest_point_init(points, k, seed);
  res.assignment.assign(n, -1);

  std::vector<int> counts(k);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bestd = dist2(points, i, res.centroids, 0);
      for (int j = 1; j < k; ++j) {
        const double dj = dist2(points, i, res.centroids, j);
        if (dj < bestd) {
          bestd = dj;
          best = j;
        }
      }
      if (res.assignment[i] != best) {
        res.assignment[i] = best;
        changed = true;
      }
    }
    if (!changed) break;

    Tensor sums({k, d});
    counts.assign(k, 0);
    for (int i = 0; i < n; ++i) {
      const int j = res.assignment[i];
      ++counts[j];
      for (int c = 0; c < d; ++c) sums.at(j, c) += points.at(i, c);
    }
    for (int j = 0; j < k; ++j) {
      if (counts[j] == 0) continue;  // empty cluster keeps its centroid
      for (int c = 0; c < d; ++c) res.centroids.at(j, c) = sums.at(j, c) / counts[j];
    }

    double inertia = 0.0;
    for (int i = 0; i < n; ++i) inertia += dist2(points, i, res.centroids, res.assignment[i]);
    res.distortion_history.push_back(inertia);
    ++res.iterations;
  }
  return res;
}

}  // namespace rmix
