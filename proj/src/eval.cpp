#include "rmix/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "rmix/mixup.hpp"
#include "rmix/rng.hpp"

namespace rmix {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Stacks equal-length rank-1 feature vectors into a {n, d} batch.
Tensor stack_rows(const std::vector<const Tensor*>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no rows");
  const int d = static_cast<int>(rows[0]->numel());
  Tensor out({static_cast<int>(rows.size()), d});
  for (size_t i = 0; i < rows.size(); ++i) {
    const Tensor& r = *rows[i];
    if (r.rank() != 1 || r.numel() != d)
      throw std::invalid_argument("stack_rows: row " + std::to_string(i) + " has shape " +
                                  r.shape_str());
    for (int j = 0; j < d; ++j) out.at(static_cast<int>(i), j) = r.at(j);
  }
  return out;
}

struct PickedBatch {
  Tensor e_ti, e_ing, e_ins;  // {n, d_f}
  Tensor images;              // {n, d_img}; rows only for picked recipes that have one
  bool all_have_images = true;
};

PickedBatch gather_recipes(const Corpus& corpus, const std::vector<int>& recipe_ids) {
  std::vector<const Tensor*> ti, ing, ins, img;
  bool images_ok = true;
  for (int id : recipe_ids) {
    const Recipe& r = corpus.recipes.at(id);
    ti.push_back(&r.features.e_ti);
    ing.push_back(&r.features.e_ing);
    ins.push_back(&r.features.e_ins);
    if (r.has_image)
      img.push_back(&r.image);
    else
      images_ok = false;
  }
  PickedBatch b;
  b.e_ti = stack_rows(ti);
  b.e_ing = stack_rows(ing);
  b.e_ins = stack_rows(ins);
  b.all_have_images = images_ok;
  if (!img.empty()) b.images = stack_rows(img);
  return b;
}

std::vector<int> pick_from(const std::vector<int>& index, int n, Rng rng) {
  std::vector<int> out;
  out.reserve(n);
  for (int pos : rng.sample_without_replacement(static_cast<int>(index.size()), n))
    out.push_back(index[pos]);
  return out;
}

}  // namespace

double median_rank(const std::vector<int>& ranks) {
  if (ranks.empty()) throw std::invalid_argument("median_rank: empty rank list");
  std::vector<int> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double recall_at_k(const std::vector<int>& ranks, int k) {
  if (ranks.empty()) throw std::invalid_argument("recall_at_k: empty rank list");
  if (k < 1) throw std::invalid_argument("recall_at_k: k must be positive");
  int hits = 0;
  for (int r : ranks)
    if (r <= k) ++hits;
  return 100.0 * hits / static_cast<double>(ranks.size());
}

std::vector<int> rank_true_pairs(const Tensor& queries, const Tensor& gallery) {
  if (queries.rank() != 2 || gallery.rank() != 2)
    throw std::invalid_argument("rank_true_pairs: rank-2 batches expected");
  if (queries.rows() != gallery.rows() || queries.cols() != gallery.cols())
    throw std::invalid_argument("rank_true_pairs: query batch " + queries.shape_str() +
                                " vs gallery " + gallery.shape_str());
  const int n = queries.rows();
  const int d = queries.cols();

  auto row_norm = [d](const Tensor& t, int i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += t.at(i, j) * t.at(i, j);
    return std::sqrt(s);
  };
  std::vector<double> gnorm(n);
  for (int i = 0; i < n; ++i) gnorm[i] = row_norm(gallery, i);

  std::vector<int> ranks(n);
  std::vector<double> sim(n);
  for (int i = 0; i < n; ++i) {
    const double qn = row_norm(queries, i);
    for (int j = 0; j < n; ++j) {
      double dot = 0.0;
      for (int c = 0; c < d; ++c) dot += queries.at(i, c) * gallery.at(j, c);
      const double denom = qn * gnorm[j];
      sim[j] = denom > 0.0 ? dot / denom : 0.0;
    }
    const double true_sim = sim[i];
    int rank = 1;
    for (int j = 0; j < n; ++j) {
      if (sim[j] > true_sim) ++rank;
      else if (sim[j] == true_sim && j < i) ++rank;
    }
    ranks[i] = rank;
  }
  return ranks;
}

EvalReport evaluate(const ModelParams& params, const Corpus& corpus, int q, int t, uint64_t seed) {
  const std::vector<int> test = corpus.split_index(Split::target_test);
  if (test.empty()) throw std::invalid_argument("evaluate: corpus has no target test pairs");
  if (q < 1 || q > static_cast<int>(test.size()))
    throw std::invalid_argument("evaluate: Q=" + std::to_string(q) + " outside [1, " +
                                std::to_string(test.size()) + "]");
  if (t < 1) throw std::invalid_argument("evaluate: repeat count must be positive");

  EvalReport report;
  report.q = q;
  report.t = t;
  report.seed = seed;
  Rng root(seed);
  for (int rep = 0; rep < t; ++rep) {
    const std::vector<int> ids = pick_from(test, q, root.fork("repeat", rep));
    const PickedBatch batch = gather_recipes(corpus, ids);
    if (!batch.all_have_images)
      throw std::invalid_argument("evaluate: a sampled test pair is missing its image");
    const Tensor recipe_emb = encode_recipe(params, batch.e_ti, batch.e_ing, batch.e_ins);
    const Tensor image_emb = encode_image(params, batch.images);
    const std::vector<int> ranks = rank_true_pairs(image_emb, recipe_emb);
    EvalRepeat r;
    r.medr = median_rank(ranks);
    r.r1 = recall_at_k(ranks, 1);
    r.r5 = recall_at_k(ranks, 5);
    r.r10 = recall_at_k(ranks, 10);
    r.r50 = recall_at_k(ranks, 50);
    report.repeats.push_back(r);
  }
  for (const EvalRepeat& r : report.repeats) {
    report.medr += r.medr;
    report.r1 += r.r1;
    report.r5 += r.r5;
    report.r10 += r.r10;
    report.r50 += r.r50;
  }
  report.medr /= t;
  report.r1 /= t;
  report.r5 /= t;
  report.r10 /= t;
  report.r50 /= t;
  return report;
}

void write_eval_csv(const EvalReport& report, std::ostream& out) {
  out << "row,medr,r1,r5,r10,r50,q,t,seed\n";
  auto line = [&](const std::string& row, double medr, double r1, double r5, double r10,
                  double r50) {
    out << row << ',' << fmt(medr) << ',' << fmt(r1) << ',' << fmt(r5) << ',' << fmt(r10) << ','
        << fmt(r50) << ',' << report.q << ',' << report.t << ',' << report.seed << '\n';
  };
  line("mean", report.medr, report.r1, report.r5, report.r10, report.r50);
  for (size_t i = 0; i < report.repeats.size(); ++i) {
    const EvalRepeat& r = report.repeats[i];
    line("repeat_" + std::to_string(i), r.medr, r.r1, r.r5, r.r10, r.r50);
  }
}

namespace {

// y += C x where C is the sample covariance of the centered matrix, applied
// implicitly as X^T (X x) / (n - 1).
std::vector<double> cov_apply(const Tensor& centered, const std::vector<double>& x) {
  const int n = centered.rows();
  const int d = centered.cols();
  std::vector<double> tmp(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += centered.at(i, j) * x[j];
    tmp[i] = s;
  }
  std::vector<double> y(d, 0.0);
  for (int i = 0; i < n; ++i) {
    const double w = tmp[i];
    for (int j = 0; j < d; ++j) y[j] += centered.at(i, j) * w;
  }
  const double denom = n - 1;
  for (double& v : y) v /= denom;
  return y;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void project_out(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
  for (const auto& b : basis) {
    const double c = dot(v, b);
    for (size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
  }
}

// First coordinate axis with a large residual against the basis, orthonormalized.
std::vector<double> fallback_direction(int d, const std::vector<std::vector<double>>& basis) {
  for (int j = 0; j < d; ++j) {
    std::vector<double> e(d, 0.0);
    e[j] = 1.0;
    project_out(e, basis);
    const double nrm = norm(e);
    if (nrm > 0.5) {
      for (double& v : e) v /= nrm;
      return e;
    }
  }
  throw std::logic_error("pca_top2: no orthogonal completion found");
}

void canonicalize_sign(std::vector<double>& v) {
  size_t arg = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (std::fabs(v[i]) > std::fabs(v[arg])) arg = i;
  if (v[arg] < 0.0)
    for (double& x : v) x = -x;
}

}  // namespace

Pca2 pca_top2(const Tensor& points, int max_iters, uint64_t seed) {
  if (points.rank() != 2) throw std::invalid_argument("pca_top2: rank-2 input expected");
  const int n = points.rows();
  const int d = points.cols();
  if (n < 2) throw std::invalid_argument("pca_top2: need at least two points");
  if (d < 2) throw std::invalid_argument("pca_top2: need at least two dimensions");
  if (max_iters < 1) throw std::invalid_argument("pca_top2: max_iters must be positive");

  Pca2 out;
  out.mean = Tensor({d});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out.mean.at(j) += points.at(i, j);
  for (int j = 0; j < d; ++j) out.mean.at(j) /= n;

  Tensor centered({n, d});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) centered.at(i, j) = points.at(i, j) - out.mean.at(j);

  Rng rng(seed);
  std::vector<std::vector<double>> comps;
  for (int c = 0; c < 2; ++c) {
    std::vector<double> v(d);
    for (double& x : v) x = rng.normal();
    project_out(v, comps);
    double nrm = norm(v);
    if (nrm < 1e-12) v = fallback_direction(d, comps);
    else
      for (double& x : v) x /= nrm;

    bool degenerate = false;
    for (int it = 0; it < max_iters; ++it) {
      std::vector<double> w = cov_apply(centered, v);
      project_out(w, comps);
      const double wn = norm(w);
      if (wn < 1e-150) {
        degenerate = true;
        break;
      }
      for (double& x : w) x /= wn;
      const double align = std::fabs(dot(w, v));
      v = std::move(w);
      if (align > 1.0 - 1e-15) break;
    }
    if (degenerate) {
      v = fallback_direction(d, comps);
      out.eigenvalues[c] = 0.0;
    } else {
      out.eigenvalues[c] = dot(v, cov_apply(centered, v));
    }
    canonicalize_sign(v);
    comps.push_back(std::move(v));
  }

  out.components = Tensor({2, d});
  for (int c = 0; c < 2; ++c)
    for (int j = 0; j < d; ++j) out.components.at(c, j) = comps[c][j];
  out.projected = Tensor({n, 2});
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 2; ++c) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += centered.at(i, j) * out.components.at(c, j);
      out.projected.at(i, c) = s;
    }
  return out;
}

std::string to_string(Domain d) { return d == Domain::source ? "source" : "target"; }
std::string to_string(Modality m) { return m == Modality::recipe ? "recipe" : "image"; }

DiagnosticsReport diagnose(const ModelParams& params, const Corpus& corpus, int n, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("diagnose: sample count must be positive");
  const std::vector<int> src = corpus.split_index(Split::source_train);
  const std::vector<int> tgt = corpus.split_index(Split::target_train);
  const std::vector<int> test = corpus.split_index(Split::target_test);
  auto check = [n](const std::vector<int>& index, const char* name) {
    if (static_cast<int>(index.size()) < n)
      throw std::invalid_argument("diagnose: " + std::string(name) + " has only " +
                                  std::to_string(index.size()) + " recipes, need " +
                                  std::to_string(n));
  };
  check(src, "source_train");
  check(tgt, "target_train");
  check(test, "target_test");

  Rng root(seed);
  const std::vector<int> src_ids = pick_from(src, n, root.fork("diag.source"));
  const std::vector<int> tgt_ids = pick_from(tgt, n, root.fork("diag.target"));
  const std::vector<int> test_ids = pick_from(test, n, root.fork("diag.test"));

  const PickedBatch src_b = gather_recipes(corpus, src_ids);
  const PickedBatch tgt_b = gather_recipes(corpus, tgt_ids);
  const PickedBatch test_b = gather_recipes(corpus, test_ids);
  if (!test_b.all_have_images)
    throw std::invalid_argument("diagnose: a sampled test pair is missing its image");

  const Tensor src_emb = encode_recipe(params, src_b.e_ti, src_b.e_ing, src_b.e_ins);
  const Tensor tgt_emb = encode_recipe(params, tgt_b.e_ti, tgt_b.e_ing, tgt_b.e_ins);
  const Tensor test_rec_emb = encode_recipe(params, test_b.e_ti, test_b.e_ing, test_b.e_ins);
  const Tensor test_img_emb = encode_image(params, test_b.images);

  DiagnosticsReport report;
  report.n = n;
  report.source_target_recipe_distance = batch_domain_distance(src_emb, tgt_emb);
  report.target_recipe_image_distance = batch_domain_distance(test_rec_emb, test_img_emb);

  const int d_e = src_emb.cols();
  Tensor stacked({4 * n, d_e});
  auto put = [&](const Tensor& block, int row0) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d_e; ++j) stacked.at(row0 + i, j) = block.at(i, j);
  };
  put(src_emb, 0);
  put(tgt_emb, n);
  put(test_rec_emb, 2 * n);
  put(test_img_emb, 3 * n);

  const Pca2 pca = pca_top2(stacked, 1000, seed);
  report.points.resize(4 * n);
  for (int i = 0; i < 4 * n; ++i) {
    DiagPoint& p = report.points[i];
    p.x = pca.projected.at(i, 0);
    p.y = pca.projected.at(i, 1);
    p.domain = i < n ? Domain::source : Domain::target;
    p.modality = i < 3 * n ? Modality::recipe : Modality::image;
  }
  return report;
}

void write_diag_points_csv(const DiagnosticsReport& report, std::ostream& out) {
  out << "x,y,domain,modality\n";
  for (const DiagPoint& p : report.points)
    out << fmt(p.x) << ',' << fmt(p.y) << ',' << to_string(p.domain) << ','
        << to_string(p.modality) << '\n';
}

void write_diag_summary_csv(const DiagnosticsReport& report, std::ostream& out) {
  out << "n,source_target_recipe_distance,target_recipe_image_distance\n";
  out << report.n << ',' << fmt(report.source_target_recipe_distance) << ','
      << fmt(report.target_recipe_image_distance) << '\n';
}

}  // namespace rmix
