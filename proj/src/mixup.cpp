#include "rmix/mixup.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rmix {

namespace {

// Bit i set = section i is exchanged (title=1, ingredients=2, instructions=4).
constexpr int kExchangeMask[kNumStrategies] = {1, 2, 4, 3, 5, 6};

int mask_of(MixupStrategy s) { return kExchangeMask[static_cast<int>(s)]; }

}  // namespace

bool exchanges(MixupStrategy s, Section which) {
  return (mask_of(s) >> static_cast<int>(which)) & 1;
}

MixupStrategy complement(MixupStrategy s) {
  const int want = 7 ^ mask_of(s);
  for (int i = 0; i < kNumStrategies; ++i)
    if (kExchangeMask[i] == want) return static_cast<MixupStrategy>(i);
  throw std::logic_error("complement: unreachable");
}

std::string to_string(MixupStrategy s) {
  return "rm" + std::to_string(static_cast<int>(s) + 1);
}

MixupStrategy strategy_from_string(const std::string& token) {
  for (int i = 0; i < kNumStrategies; ++i)
    if (token == to_string(static_cast<MixupStrategy>(i))) return static_cast<MixupStrategy>(i);
  throw std::invalid_argument("unknown mixup strategy '" + token + "' (expected rm1..rm6)");
}

void FeatureBatch::validate() const {
  if (e_ti.rank() != 2 || e_ing.rank() != 2 || e_ins.rank() != 2)
    throw std::invalid_argument("FeatureBatch: sections must be rank-2");
  if (!e_ti.same_shape(e_ing) || !e_ti.same_shape(e_ins))
    throw std::invalid_argument("FeatureBatch: section shapes differ: " + e_ti.shape_str() +
                                ", " + e_ing.shape_str() + ", " + e_ins.shape_str());
}

MixedPair mix(const FeatureBatch& source, const FeatureBatch& target, MixupStrategy s,
              std::vector<int> source_rows, std::vector<int> target_rows) {
  source.validate();
  target.validate();
  if (source.size() != target.size())
    throw std::invalid_argument("mix: batch sizes differ: " + std::to_string(source.size()) +
                                " vs " + std::to_string(target.size()));
  const int b = source.size();
  if (source_rows.empty()) {
    source_rows.resize(b);
    std::iota(source_rows.begin(), source_rows.end(), 0);
  }
  if (target_rows.empty()) {
    target_rows.resize(b);
    std::iota(target_rows.begin(), target_rows.end(), 0);
  }
  if (static_cast<int>(source_rows.size()) != b || static_cast<int>(target_rows.size()) != b)
    throw std::invalid_argument("mix: provenance length differs from batch size");

  MixedPair out;
  out.strategy = s;
  out.source_rows = std::move(source_rows);
  out.target_rows = std::move(target_rows);
  out.source_mixed = source;
  out.target_mixed = target;

  auto swap_section = [&](Section which, const Tensor& src, const Tensor& tgt, Tensor& sm,
                          Tensor& tm) {
    if (!exchanges(s, which)) return;
    sm = tgt;
    tm = src;
  };
  swap_section(Section::title, source.e_ti, target.e_ti, out.source_mixed.e_ti,
               out.target_mixed.e_ti);
  swap_section(Section::ingredients, source.e_ing, target.e_ing, out.source_mixed.e_ing,
               out.target_mixed.e_ing);
  swap_section(Section::instructions, source.e_ins, target.e_ins, out.source_mixed.e_ins,
               out.target_mixed.e_ins);
  return out;
}

namespace {

void check_batch(const Tensor& t, const char* name) {
  if (t.rank() != 2) throw std::invalid_argument(std::string(name) + ": embeddings must be rank-2");
  if (t.rows() == 0) throw std::invalid_argument(std::string(name) + ": empty batch");
}

}  // namespace

double batch_domain_distance(const Tensor& a, const Tensor& b) {
  check_batch(a, "batch_domain_distance");
  check_batch(b, "batch_domain_distance");
  if (a.cols() != b.cols())
    throw std::invalid_argument("batch_domain_distance: dimension mismatch: " + a.shape_str() +
                                " vs " + b.shape_str());
  double sq = 0.0;
  for (int j = 0; j < a.cols(); ++j) {
    double ma = 0.0, mb = 0.0;
    for (int i = 0; i < a.rows(); ++i) ma += a.at(i, j);
    for (int i = 0; i < b.rows(); ++i) mb += b.at(i, j);
    const double diff = ma / a.rows() - mb / b.rows();
    sq += diff * diff;
  }
  return std::sqrt(sq);
}

double batch_domain_distance(const EmbeddingBatch& a, const EmbeddingBatch& b) {
  return batch_domain_distance(a.rows, b.rows);
}

Var batch_domain_distance(Graph& g, Var a, Var b) {
  check_batch(g.value(a), "batch_domain_distance");
  check_batch(g.value(b), "batch_domain_distance");
  return g.l2norm(g.sub(g.mean_axis(a, 0), g.mean_axis(b, 0)));
}

namespace {

// Mean over rows of the L2 distance between positionally paired rows.
Var paired_row_distance(Graph& g, Var a, Var b) {
  check_batch(g.value(a), "paired_row_distance");
  check_batch(g.value(b), "paired_row_distance");
  if (g.value(a).rows() != g.value(b).rows())
    throw std::invalid_argument("paired_row_distance: batch sizes differ: " +
                                g.value(a).shape_str() + " vs " + g.value(b).shape_str());
  Var diff = g.sub(a, b);
  return g.mean(g.sqrt(g.sum_axis(g.mul(diff, diff), 1)));
}

Var distance(Graph& g, Var a, Var b, DistanceMode mode) {
  return mode == DistanceMode::batch_mean ? batch_domain_distance(g, a, b)
                                          : paired_row_distance(g, a, b);
}

}  // namespace

Var mixup_loss_s(Graph& g, Var e_s, Var e_t, Var e_sm, DistanceMode mode) {
  Var shift = g.add(distance(g, e_s, e_sm, mode), distance(g, e_t, e_sm, mode));
  return g.sub(shift, distance(g, e_s, e_t, mode));
}

Var mixup_loss_t(Graph& g, Var e_s, Var e_t, Var e_tm, DistanceMode mode) {
  return mixup_loss_s(g, e_t, e_s, e_tm, mode);
}

Var mixup_loss_st(Graph& g, Var e_s, Var e_t, Var e_sm, Var e_tm, DistanceMode mode) {
  return g.smul(g.add(mixup_loss_s(g, e_s, e_t, e_sm, mode), mixup_loss_t(g, e_s, e_t, e_tm, mode)),
                0.5);
}

}  // namespace rmix
