#ifndef RMIX_EVAL_HPP_
#define RMIX_EVAL_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rmix/corpus.hpp"
#include "rmix/model.hpp"
#include "rmix/tensor.hpp"

namespace rmix {

double median_rank(const std::vector<int>& ranks);
double recall_at_k(const std::vector<int>& ranks, int k);  // percent

// 1-based rank of the true gallery row (row i for query i) by descending
// cosine similarity; ties go to the lower gallery index.
std::vector<int> rank_true_pairs(const Tensor& queries, const Tensor& gallery);

struct EvalRepeat {
  double medr = 0.0;
  double r1 = 0.0, r5 = 0.0, r10 = 0.0, r50 = 0.0;
};

struct EvalReport {
  double medr = 0.0;
  double r1 = 0.0, r5 = 0.0, r10 = 0.0, r50 = 0.0;  // means over repeats
  int q = 0;
  int t = 0;
  uint64_t seed = 0;
  std::vector<EvalRepeat> repeats;
};

// Image-to-recipe retrieval over the target test pairs: per repeat, Q pairs
// sampled without replacement; image queries rank the Q recipe gallery.
EvalReport evaluate(const ModelParams& params, const Corpus& corpus, int q, int t, uint64_t seed);

void write_eval_csv(const EvalReport& report, std::ostream& out);

struct Pca2 {
  Tensor mean;        // {d}
  Tensor components;  // {2, d}, orthonormal rows
  Tensor projected;   // {n, 2}
  double eigenvalues[2] = {0.0, 0.0};
};

// Top-2 principal directions of the sample covariance (n-1 denominator) by
// power iteration with deflation. Degenerate directions fall back to zero
// eigenvalue with an arbitrary orthonormal completion.
Pca2 pca_top2(const Tensor& points, int max_iters = 1000, uint64_t seed = 1);

std::string to_string(Domain d);
std::string to_string(Modality m);

struct DiagPoint {
  double x = 0.0, y = 0.0;
  Domain domain = Domain::source;
  Modality modality = Modality::recipe;
};

struct DiagnosticsReport {
  double source_target_recipe_distance = 0.0;
  double target_recipe_image_distance = 0.0;
  int n = 0;
  std::vector<DiagPoint> points;  // n source + n target recipes, n test recipes + n test images
};

DiagnosticsReport diagnose(const ModelParams& params, const Corpus& corpus, int n, uint64_t seed);

void write_diag_points_csv(const DiagnosticsReport& report, std::ostream& out);
void write_diag_summary_csv(const DiagnosticsReport& report, std::ostream& out);

}  // namespace rmix

#endif  // RMIX_EVAL_HPP_
