#ifndef RMIX_OBJECTIVE_HPP_
#define RMIX_OBJECTIVE_HPP_

#include <string>
#include <vector>

#include "rmix/graph.hpp"
#include "rmix/model.hpp"
#include "rmix/rng.hpp"
#include "rmix/tensor.hpp"

namespace rmix {

struct LossWeights {
  double lambda1 = 0.1;    // mixup
  double lambda2 = 0.01;   // adversarial
  double lambda3 = 0.002;  // semantic + generation
  double alpha = 0.3;      // triplet margin

  void validate() const;  // weights >= 0, alpha in (0, 2]
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

enum class TripletPolicy { random, hardest };

std::string to_string(TripletPolicy p);
TripletPolicy policy_from_string(const std::string& token);

struct TripletIndexSet {
  std::vector<int> anchor;
  std::vector<int> positive;  // the anchor's true pair
  std::vector<int> negative;  // never equals the positive
  Modality anchor_modality = Modality::image;
};

// In-batch negatives for anchors whose positive is the same-index candidate
// row. "random" draws uniformly among the other rows; "hardest" picks the
// candidate closest to the anchor under d = 1 - cosine (ties: lowest index).
TripletIndexSet sample_triplets(const Tensor& anchors, const Tensor& candidates,
                                TripletPolicy policy, Rng& rng, Modality anchor_modality);

// Mean over anchors of max(0, d(a,p) - d(a,n) + alpha), d = 1 - cosine.
Var triplet_loss(Graph& g, Var anchors, Var positives, Var negatives, double alpha);

struct TripletBatch {
  TripletIndexSet image_anchored;
  TripletIndexSet recipe_anchored;
};

TripletBatch sample_bidirectional(const Tensor& recipe_emb, const Tensor& image_emb,
                                  TripletPolicy policy, Rng& rng);

// Average of the image-anchored and recipe-anchored triplet losses.
Var bidirectional_triplet_loss(Graph& g, Var recipe_emb, Var image_emb, const TripletBatch& idx,
                               double alpha);

// Expected log D on source plus expected log (1 - D) on target, probabilities
// clamped to [1e-7, 1 - 1e-7]. Gradients flow naturally (finite-difference
// checkable); training uses adversarial_loss below instead.
Var adversarial_value(Graph& g, const ModelGraph& m, Var e_s, Var e_t);

// Same value as adversarial_value, min-max routing: within a minimized total,
// the discriminator ascends the value while the embeddings descend it through
// a reversal layer of the given coefficient.
Var adversarial_loss(Graph& g, const ModelGraph& m, Var e_s, Var e_t, double coeff = 1.0);

// Mean binary cross-entropy over batch x labels, probabilities clamped as
// above. Targets are multi-hot rows.
Var semantic_loss(Graph& g, Var probs, const Tensor& targets);

Tensor multi_hot(const std::vector<std::vector<int>>& label_sets, int k);

// Mean over rows of the squared L2 distance between generated and real rows.
Var generation_loss(Graph& g, Var generated, Var real);

// total = tri + l1*rm + l2*adv + l3*(sem + gen). Components whose weight is
// zero are ignored and may be left invalid; a weighted component must be a
// valid scalar.
Var total_loss(Graph& g, Var tri, Var rm, Var adv, Var sem, Var gen, const LossWeights& w);

}  // namespace rmix

#endif  // RMIX_OBJECTIVE_HPP_
