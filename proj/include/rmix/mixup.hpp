#ifndef RMIX_MIXUP_HPP_
#define RMIX_MIXUP_HPP_

#include <string>
#include <vector>

#include "rmix/graph.hpp"
#include "rmix/model.hpp"
#include "rmix/tensor.hpp"

namespace rmix {

enum class Section { title = 0, ingredients = 1, instructions = 2 };

// The six strategies are the nonempty proper subsets of the three sections,
// excluding the full set; rm1..rm3 exchange one section, rm4..rm6 two.
enum class MixupStrategy { rm1, rm2, rm3, rm4, rm5, rm6 };

constexpr int kNumStrategies = 6;

bool exchanges(MixupStrategy s, Section which);
MixupStrategy complement(MixupStrategy s);  // (rm1,rm6), (rm2,rm5), (rm3,rm4)
std::string to_string(MixupStrategy s);
MixupStrategy strategy_from_string(const std::string& token);

// One section feature per column block; rows pair positionally across
// batches.
struct FeatureBatch {
  Tensor e_ti;   // {B, d_f}
  Tensor e_ing;  // {B, d_f}
  Tensor e_ins;  // {B, d_f}

  int size() const { return e_ti.rank() == 2 ? e_ti.rows() : 0; }
  void validate() const;  // rank-2 sections with matching shapes

  friend bool operator==(const FeatureBatch&, const FeatureBatch&) = default;
};

struct MixedPair {
  FeatureBatch source_mixed;  // source rows with exchanged sections from target
  FeatureBatch target_mixed;  // the symmetric complement
  MixupStrategy strategy = MixupStrategy::rm1;
  std::vector<int> source_rows;  // provenance of row i in the paired inputs
  std::vector<int> target_rows;
};

// Row i of both outputs mixes source row i with target row i. Inputs are
// untouched; provenance records the paired row ids (positional unless the
// caller supplies the batch's corpus indices).
MixedPair mix(const FeatureBatch& source, const FeatureBatch& target, MixupStrategy s,
              std::vector<int> source_rows = {}, std::vector<int> target_rows = {});

// Distance between the section terms of the mixup losses.
//   batch_mean: L2 norm of the difference of batch-mean embeddings (the
//               distribution distance; also used by the diagnostics).
//   per_sample: mean over rows of the L2 distance of positionally paired
//               rows (requires equal batch sizes).
enum class DistanceMode { batch_mean, per_sample };

double batch_domain_distance(const Tensor& a, const Tensor& b);
double batch_domain_distance(const EmbeddingBatch& a, const EmbeddingBatch& b);
Var batch_domain_distance(Graph& g, Var a, Var b);

// Extra domain shift of the intermediate domain over the shortest geodesic
// path: d(s,m) + d(t,m) - d(s,t), with m the mixed batch embedding.
Var mixup_loss_s(Graph& g, Var e_s, Var e_t, Var e_sm,
                 DistanceMode mode = DistanceMode::batch_mean);
Var mixup_loss_t(Graph& g, Var e_s, Var e_t, Var e_tm,
                 DistanceMode mode = DistanceMode::batch_mean);
Var mixup_loss_st(Graph& g, Var e_s, Var e_t, Var e_sm, Var e_tm,
                  DistanceMode mode = DistanceMode::batch_mean);

}  // namespace rmix

#endif  // RMIX_MIXUP_HPP_
