#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "rmix/kmeans.hpp"
#include "rmix/rng.hpp"
#include "test_util.hpp"

using rmix::farthest_point_init;
using rmix::kmeans;
using rmix::KMeansResult;
using rmix::Rng;
using rmix::Tensor;

namespace {

// Plain-loop Lloyd reference, written independently of the library version:
// runs from given centroids to a fixpoint, returns final inertia.
double reference_lloyd(const Tensor& points, Tensor centroids, int max_iters) {
  const int n = points.rows(), d = points.cols(), k = centroids.rows();
  auto d2 = [&](int i, const Tensor& c, int j) {
    double s = 0.0;
    for (int q = 0; q < d; ++q) s += (points.at(i, q) - c.at(j, q)) * (points.at(i, q) - c.at(j, q));
    return s;
  };
  std::vector<int> assign(n, -1);
  for (int it = 0; it < max_iters; ++it) {
    bool moved = false;
    for (int i = 0; i < n; ++i) {
      int arg = 0;
      for (int j = 1; j < k; ++j)
        if (d2(i, centroids, j) < d2(i, centroids, arg)) arg = j;
      if (assign[i] != arg) {
        assign[i] = arg;
        moved = true;
      }
    }
    if (!moved) break;
    for (int j = 0; j < k; ++j) {
      double cnt = 0.0;
      std::vector<double> acc(d, 0.0);
      for (int i = 0; i < n; ++i)
        if (assign[i] == j) {
          cnt += 1.0;
          for (int q = 0; q < d; ++q) acc[q] += points.at(i, q);
        }
      if (cnt == 0.0) continue;
      for (int q = 0; q < d; ++q) centroids.at(j, q) = acc[q] / cnt;
    }
  }
  double inertia = 0.0;
  for (int i = 0; i < n; ++i) inertia += d2(i, centroids, assign[i]);
  return inertia;
}

}  // namespace

TEST_CASE("well-separated duplicated points are recovered exactly") {
  // Three tight stacks of identical points far apart.
  std::vector<double> data;
  std::vector<double> centers = {0.0, 0.0, 10.0, 0.0, 0.0, 10.0};
  for (int c = 0; c < 3; ++c)
    for (int rep = 0; rep < 5; ++rep) {
      data.push_back(centers[2 * c]);
      data.push_back(centers[2 * c + 1]);
    }
  Tensor points({15, 2}, data);
  KMeansResult res = kmeans(points, 3, 50, 123);
  CHECK(res.distortion() == 0.0);
  for (int c = 0; c < 3; ++c)
    for (int rep = 1; rep < 5; ++rep)
      CHECK(res.assignment[5 * c + rep] == res.assignment[5 * c]);
  for (int c = 0; c < 3; ++c) {
    const int j = res.assignment[5 * c];
    CHECK(res.centroids.at(j, 0) == centers[2 * c]);
    CHECK(res.centroids.at(j, 1) == centers[2 * c + 1]);
  }
}

TEST_CASE("k equal to the point count gives zero distortion") {
  Rng rng(9);
  Tensor points = rmixtest::rnd({12, 3}, rng);
  KMeansResult res = kmeans(points, 12, 20, 7);
  CHECK(res.distortion() == doctest::Approx(0.0).epsilon(1e-15));
  std::vector<bool> used(12, false);
  for (int a : res.assignment) {
    CHECK(!used[a]);
    used[a] = true;
  }
}

TEST_CASE("distortion matches an independent Lloyd reference from the same init") {
  Rng rng(77);
  Tensor points = rmixtest::rnd({50, 2}, rng, -5.0, 5.0);
  const uint64_t seed = 4242;
  KMeansResult res = kmeans(points, 3, 100, seed);
  const double ref = reference_lloyd(points, farthest_point_init(points, 3, seed), 100);
  CHECK(std::fabs(res.distortion() - ref) < 1e-9);
}

TEST_CASE("distortion history is non-increasing") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 20 + rng.uniform_int(40);
    const int k = 2 + rng.uniform_int(6);
    Tensor points = rmixtest::rnd({n, 4}, rng, -3.0, 3.0);
    KMeansResult res = kmeans(points, k, 60, 1000 + trial);
    for (size_t i = 1; i < res.distortion_history.size(); ++i)
      CHECK(res.distortion_history[i] <= res.distortion_history[i - 1] + 1e-12);
  }
}

TEST_CASE("invalid arguments are rejected") {
  Rng rng(1);
  Tensor points = rmixtest::rnd({5, 2}, rng);
  CHECK_THROWS_AS(kmeans(points, 6, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(kmeans(points, 0, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(kmeans(points, 2, 0, 1), std::invalid_argument);
}

TEST_CASE("same seed reproduces the same clustering") {
  Rng rng(13);
  Tensor points = rmixtest::rnd({30, 3}, rng);
  KMeansResult a = kmeans(points, 4, 50, 99);
  KMeansResult b = kmeans(points, 4, 50, 99);
  CHECK(a.assignment == b.assignment);
  CHECK(a.centroids == b.centroids);
  CHECK(a.distortion_history == b.distortion_history);
}
