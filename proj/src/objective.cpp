#include "rmix/objective.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rmix {

namespace {

constexpr double kProbClamp = 1e-7;

void check_emb(const Tensor& t, const char* who) {
  if (t.rank() != 2)
    throw std::invalid_argument(std::string(who) + ": embeddings must be rank-2, got " +
                                t.shape_str());
}

double row_cosine(const Tensor& a, int i, const Tensor& b, int j) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int c = 0; c < a.cols(); ++c) {
    dot += a.at(i, c) * b.at(j, c);
    na += a.at(i, c) * a.at(i, c);
    nb += b.at(j, c) * b.at(j, c);
  }
  const double denom = std::sqrt(na) * std::sqrt(nb);
  return denom > 0.0 ? dot / denom : 0.0;
}

}  // namespace

void LossWeights::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0)
    throw std::invalid_argument("LossWeights: negative weight");
  if (!(alpha > 0.0) || alpha > 2.0)
    throw std::invalid_argument("LossWeights: alpha must be in (0, 2], got " +
                                std::to_string(alpha));
}

std::string to_string(TripletPolicy p) {
  return p == TripletPolicy::random ? "random" : "hardest";
}

TripletPolicy policy_from_string(const std::string& token) {
  if (token == "random") return TripletPolicy::random;
  if (token == "hardest") return TripletPolicy::hardest;
  throw std::invalid_argument("unknown triplet policy '" + token +
                              "' (expected random or hardest)");
}

TripletIndexSet sample_triplets(const Tensor& anchors, const Tensor& candidates,
                                TripletPolicy policy, Rng& rng, Modality anchor_modality) {
  check_emb(anchors, "sample_triplets");
  check_emb(candidates, "sample_triplets");
  if (anchors.rows() != candidates.rows() || anchors.cols() != candidates.cols())
    throw std::invalid_argument("sample_triplets: paired batches differ: " + anchors.shape_str() +
                                " vs " + candidates.shape_str());
  const int b = anchors.rows();
  if (b < 2) throw std::invalid_argument("sample_triplets: need at least 2 pairs, got " +
                                         std::to_string(b));

  TripletIndexSet out;
  out.anchor_modality = anchor_modality;
  out.anchor.resize(b);
  out.positive.resize(b);
  out.negative.resize(b);
  std::iota(out.anchor.begin(), out.anchor.end(), 0);
  out.positive = out.anchor;
  for (int i = 0; i < b; ++i) {
    if (policy == TripletPolicy::random) {
      int j = rng.uniform_int(b - 1);
      if (j >= i) ++j;
      out.negative[i] = j;
    } else {
      // closest candidate under d = 1 - cosine, i.e. highest cosine
      int best = -1;
      double best_cos = 0.0;
      for (int j = 0; j < b; ++j) {
        if (j == i) continue;
        const double c = row_cosine(anchors, i, candidates, j);
        if (best < 0 || c > best_cos) {
          best = j;
          best_cos = c;
        }
      }
      out.negative[i] = best;
    }
  }
  return out;
}

Var triplet_loss(Graph& g, Var anchors, Var positives, Var negatives, double alpha) {
  check_emb(g.value(anchors), "triplet_loss");
  const int b = g.value(anchors).rows();
  Var an = g.unit_rows(anchors);
  Var pn = g.unit_rows(positives);
  Var nn = g.unit_rows(negatives);
  Var cos_ap = g.sum_axis(g.mul(an, pn), 1);
  Var cos_an = g.sum_axis(g.mul(an, nn), 1);
  // d(a,p) - d(a,n) + alpha with d = 1 - cosine
  Var margin = g.add(g.sub(cos_an, cos_ap), g.constant(Tensor::full({b}, alpha)));
  return g.mean(g.cmax(margin, 0.0));
}

TripletBatch sample_bidirectional(const Tensor& recipe_emb, const Tensor& image_emb,
                                  TripletPolicy policy, Rng& rng) {
  TripletBatch out;
  out.image_anchored = sample_triplets(image_emb, recipe_emb, policy, rng, Modality::image);
  out.recipe_anchored = sample_triplets(recipe_emb, image_emb, policy, rng, Modality::recipe);
  return out;
}

Var bidirectional_triplet_loss(Graph& g, Var recipe_emb, Var image_emb, const TripletBatch& idx,
                               double alpha) {
  Var img_anchor = triplet_loss(g, g.gather_rows(image_emb, idx.image_anchored.anchor),
                                g.gather_rows(recipe_emb, idx.image_anchored.positive),
                                g.gather_rows(recipe_emb, idx.image_anchored.negative), alpha);
  Var rec_anchor = triplet_loss(g, g.gather_rows(recipe_emb, idx.recipe_anchored.anchor),
                                g.gather_rows(image_emb, idx.recipe_anchored.positive),
                                g.gather_rows(image_emb, idx.recipe_anchored.negative), alpha);
  return g.smul(g.add(img_anchor, rec_anchor), 0.5);
}

namespace {

Var clamped_log(Graph& g, Var p) { return g.log(g.clamp(p, kProbClamp, 1.0 - kProbClamp)); }

Var one_minus(Graph& g, Var p) {
  return g.sub(g.constant(Tensor::full(g.value(p).shape(), 1.0)), p);
}

Var adversarial_raw(Graph& g, const ModelGraph& m, Var e_s, Var e_t) {
  Var d_s = discriminate(m, e_s);
  Var d_t = discriminate(m, e_t);
  return g.add(g.mean(clamped_log(g, d_s)), g.mean(clamped_log(g, one_minus(g, d_t))));
}

}  // namespace

Var adversarial_value(Graph& g, const ModelGraph& m, Var e_s, Var e_t) {
  return adversarial_raw(g, m, e_s, e_t);
}

Var adversarial_loss(Graph& g, const ModelGraph& m, Var e_s, Var e_t, double coeff) {
  // The reversal layer at the embedding boundary separates the encoder's
  // direction from the discriminator's. The outer flip makes a minimized
  // total ascend the value through the discriminator while reporting the
  // value itself unchanged.
  Var raw = adversarial_raw(g, m, g.grad_reverse(e_s, coeff), g.grad_reverse(e_t, coeff));
  return g.neg(g.grad_reverse(g.neg(raw), 1.0));
}

Var semantic_loss(Graph& g, Var probs, const Tensor& targets) {
  const Tensor& p = g.value(probs);
  if (p.rank() != 2 || !p.same_shape(targets))
    throw std::invalid_argument("semantic_loss: probabilities " + p.shape_str() +
                                " do not match targets " + rmix::shape_str(targets.shape()));
  Var y = g.constant(targets);
  Var on_label = g.mul(y, clamped_log(g, probs));
  Var off_label = g.mul(one_minus(g, y), clamped_log(g, one_minus(g, probs)));
  return g.neg(g.mean(g.add(on_label, off_label)));
}

Tensor multi_hot(const std::vector<std::vector<int>>& label_sets, int k) {
  if (k < 1) throw std::invalid_argument("multi_hot: k must be >= 1");
  Tensor out({static_cast<int>(label_sets.size()), k});
  for (size_t i = 0; i < label_sets.size(); ++i)
    for (int label : label_sets[i]) {
      if (label < 0 || label >= k)
        throw std::invalid_argument("multi_hot: label " + std::to_string(label) +
                                    " outside [0, " + std::to_string(k) + ")");
      out.at(static_cast<int>(i), label) = 1.0;
    }
  return out;
}

Var generation_loss(Graph& g, Var generated, Var real) {
  if (g.value(generated).rank() != 2 || !g.value(generated).same_shape(g.value(real)))
    throw std::invalid_argument("generation_loss: shapes differ: " +
                                g.value(generated).shape_str() + " vs " +
                                g.value(real).shape_str());
  const int rows = g.value(generated).rows();
  Var diff = g.sub(generated, real);
  return g.smul(g.sum(g.mul(diff, diff)), 1.0 / rows);
}

Var total_loss(Graph& g, Var tri, Var rm, Var adv, Var sem, Var gen, const LossWeights& w) {
  w.validate();
  auto check_scalar = [&](Var v, const char* name) {
    if (v.id < 0)
      throw std::invalid_argument("total_loss: weighted component '" + std::string(name) +
                                  "' is missing");
    if (!g.value(v).is_scalar())
      throw std::invalid_argument("total_loss: component '" + std::string(name) +
                                  "' is not scalar");
  };
  check_scalar(tri, "tri");
  Var total = tri;
  if (w.lambda1 != 0.0) {
    check_scalar(rm, "rm");
    total = g.add(total, g.smul(rm, w.lambda1));
  }
  if (w.lambda2 != 0.0) {
    check_scalar(adv, "adv");
    total = g.add(total, g.smul(adv, w.lambda2));
  }
  if (w.lambda3 != 0.0) {
    check_scalar(sem, "sem");
    check_scalar(gen, "gen");
    total = g.add(total, g.smul(g.add(sem, gen), w.lambda3));
  }
  return total;
}

}  // namespace rmix
