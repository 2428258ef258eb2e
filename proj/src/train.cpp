#include "rmix/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "json.hpp"
#include "rmix/adam.hpp"
#include "rmix/gradcheck.hpp"
#include "rmix/graph.hpp"
#include "rmix/rng.hpp"

namespace rmix {

std::string to_string(MixupVariant v) {
  switch (v) {
    case MixupVariant::rm_s: return "rm_s";
    case MixupVariant::rm_t: return "rm_t";
    case MixupVariant::rm_st: return "rm_st";
  }
  throw std::logic_error("to_string: bad mixup variant");
}

MixupVariant variant_from_string(const std::string& token) {
  if (token == "rm_s") return MixupVariant::rm_s;
  if (token == "rm_t") return MixupVariant::rm_t;
  if (token == "rm_st") return MixupVariant::rm_st;
  throw std::invalid_argument("unknown mixup variant '" + token + "'");
}

std::string to_string(DistanceMode m) {
  return m == DistanceMode::batch_mean ? "batch_mean" : "per_sample";
}

DistanceMode distance_from_string(const std::string& token) {
  if (token == "batch_mean") return DistanceMode::batch_mean;
  if (token == "per_sample") return DistanceMode::per_sample;
  throw std::invalid_argument("unknown distance mode '" + token + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be positive");
  if (!(reversal >= 0.0)) throw std::invalid_argument("TrainConfig: reversal must be >= 0");
  if (hidden < 1) throw std::invalid_argument("TrainConfig: hidden must be >= 1");
  if (embed < 1) throw std::invalid_argument("TrainConfig: embed must be >= 1");
  weights.validate();
  strategy_from_string(strategy);
  variant_from_string(variant);
  policy_from_string(policy);
  distance_from_string(distance);
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open train config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("train config " + path + ": " + e.what());
  }
  TrainConfig c;
  auto take = [&](const char* name, auto& field) {
    if (j.contains(name)) field = j.at(name).get<std::decay_t<decltype(field)>>();
  };
  take("epochs", c.epochs);
  take("batch_size", c.batch_size);
  take("lr", c.lr);
  take("lambda1", c.weights.lambda1);
  take("lambda2", c.weights.lambda2);
  take("lambda3", c.weights.lambda3);
  take("alpha", c.weights.alpha);
  take("strategy", c.strategy);
  take("variant", c.variant);
  take("policy", c.policy);
  take("distance", c.distance);
  take("seed", c.seed);
  take("oracle", c.oracle);
  take("reversal", c.reversal);
  take("hidden", c.hidden);
  take("embed", c.embed);
  take("corpus_path", c.corpus_path);
  take("ckpt_path", c.ckpt_path);
  take("log_path", c.log_path);
  c.validate();
  return c;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct Minibatch {
  FeatureBatch features;
  Tensor images;  // {b, d_img} when requested
  std::vector<std::vector<int>> labels;
};

Minibatch gather(const Corpus& corpus, const std::vector<int>& ids, bool want_images) {
  const int b = static_cast<int>(ids.size());
  const int d_f = corpus.config.d_f;
  Minibatch mb;
  mb.features.e_ti = Tensor({b, d_f});
  mb.features.e_ing = Tensor({b, d_f});
  mb.features.e_ins = Tensor({b, d_f});
  if (want_images) mb.images = Tensor({b, corpus.config.d_img});
  for (int i = 0; i < b; ++i) {
    const Recipe& r = corpus.recipes.at(ids[i]);
    for (int j = 0; j < d_f; ++j) {
      mb.features.e_ti.at(i, j) = r.features.e_ti.at(j);
      mb.features.e_ing.at(i, j) = r.features.e_ing.at(j);
      mb.features.e_ins.at(i, j) = r.features.e_ins.at(j);
    }
    if (want_images) {
      if (!r.has_image)
        throw std::invalid_argument("train: recipe " + std::to_string(r.id) +
                                    " in the pair split has no image");
      for (int j = 0; j < corpus.config.d_img; ++j) mb.images.at(i, j) = r.image.at(j);
    }
    mb.labels.push_back(r.labels);
  }
  return mb;
}

Var encode_features(const ModelGraph& m, Graph& g, const FeatureBatch& fb) {
  return encode_recipe(m, g.constant(fb.e_ti), g.constant(fb.e_ing), g.constant(fb.e_ins));
}

}  // namespace

TrainResult train(const Corpus& corpus, const TrainConfig& cfg) {
  cfg.validate();
  const MixupStrategy strategy = strategy_from_string(cfg.strategy);
  const MixupVariant variant = variant_from_string(cfg.variant);
  const TripletPolicy policy = policy_from_string(cfg.policy);
  const DistanceMode mode = distance_from_string(cfg.distance);
  const LossWeights& w = cfg.weights;
  const bool need_mix = w.lambda1 != 0.0;
  const bool need_adv = w.lambda2 != 0.0;
  const bool need_heads = w.lambda3 != 0.0;
  const bool need_target = need_mix || need_adv;

  const std::vector<int> pair_split =
      corpus.split_index(cfg.oracle ? Split::target_test : Split::source_train);
  const std::vector<int> target_split = corpus.split_index(Split::target_train);
  const int n_pairs = static_cast<int>(pair_split.size());
  if (n_pairs < 2) throw std::invalid_argument("train: pair split needs at least two recipes");
  const int largest_batch = std::min(cfg.batch_size, n_pairs);
  if (need_target && static_cast<int>(target_split.size()) < largest_batch)
    throw std::invalid_argument("train: target_train has " +
                                std::to_string(target_split.size()) +
                                " recipes, need " + std::to_string(largest_batch) +
                                " per batch for the adaptation losses");

  ModelDims dims;
  dims.d_f = corpus.config.d_f;
  dims.d_img = corpus.config.d_img;
  dims.h = cfg.hidden;
  dims.d_e = cfg.embed;
  dims.labels = corpus.unified.k;
  TrainResult result;
  result.params = init_params(dims, cfg.seed);

  Adam adam(AdamConfig{cfg.lr});
  Rng root(cfg.seed);
  int64_t global_step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng order_rng = root.fork("order", static_cast<uint64_t>(epoch));
    const std::vector<int> order = order_rng.permutation(n_pairs);
    EpochStats stats;
    stats.epoch = epoch;
    double acc_total = 0, acc_tri = 0, acc_rm = 0, acc_adv = 0, acc_sem = 0, acc_gen = 0;

    for (int start = 0; start < n_pairs; start += cfg.batch_size) {
      const int b = std::min(cfg.batch_size, n_pairs - start);
      if (b < 2) break;  // triplet sampling needs a second row
      std::vector<int> ids(b);
      for (int i = 0; i < b; ++i) ids[i] = pair_split[order[start + i]];
      Rng step_rng = root.fork("step", static_cast<uint64_t>(global_step));

      std::vector<int> target_ids;
      if (need_target)
        for (int pos :
             step_rng.sample_without_replacement(static_cast<int>(target_split.size()), b))
          target_ids.push_back(target_split[pos]);

      const Minibatch pair_b = gather(corpus, ids, true);
      Graph g;
      ModelGraph m = bind(g, result.params, true);
      const Var e_r = encode_features(m, g, pair_b.features);
      const Var e_i = encode_image(m, g.constant(pair_b.images));

      const Tensor rec_val = g.value(e_r);
      const Tensor img_val = g.value(e_i);
      const TripletBatch tb = sample_bidirectional(rec_val, img_val, policy, step_rng);
      const Var tri = bidirectional_triplet_loss(g, e_r, e_i, tb, w.alpha);
      result.counters.triplet++;

      Var rm{}, adv{}, sem{}, gen{};
      Minibatch target_b;
      Var e_t{};
      if (need_target) {
        target_b = gather(corpus, target_ids, false);
        e_t = encode_features(m, g, target_b.features);
      }
      if (need_mix) {
        const MixedPair mp = mix(pair_b.features, target_b.features, strategy, ids, target_ids);
        switch (variant) {
          case MixupVariant::rm_s:
            rm = mixup_loss_s(g, e_r, e_t, encode_features(m, g, mp.source_mixed), mode);
            break;
          case MixupVariant::rm_t:
            rm = mixup_loss_t(g, e_r, e_t, encode_features(m, g, mp.target_mixed), mode);
            break;
          case MixupVariant::rm_st:
            rm = mixup_loss_st(g, e_r, e_t, encode_features(m, g, mp.source_mixed),
                               encode_features(m, g, mp.target_mixed), mode);
            break;
        }
        result.counters.mixup++;
      }
      if (need_adv) {
        adv = adversarial_loss(g, m, e_r, e_t, cfg.reversal);
        result.counters.adversarial++;
      }
      if (need_heads) {
        sem = semantic_loss(g, decode_ingredients(m, e_i), multi_hot(pair_b.labels, dims.labels));
        gen = generation_loss(g, generate_image_feature(m, e_r), g.constant(pair_b.images));
        result.counters.semantic++;
        result.counters.generation++;
      }

      const Var total = total_loss(g, tri, rm, adv, sem, gen, w);
      const double v_total = g.value(total).item();
      const double v_tri = g.value(tri).item();
      const double v_rm = need_mix ? g.value(rm).item() : 0.0;
      const double v_adv = need_adv ? g.value(adv).item() : 0.0;
      const double v_sem = need_heads ? g.value(sem).item() : 0.0;
      const double v_gen = need_heads ? g.value(gen).item() : 0.0;
      if (!std::isfinite(v_total)) {
        auto show = [](bool built, double v) { return built ? fmt(v) : std::string("off"); };
        throw std::runtime_error("train: non-finite loss at step " + std::to_string(global_step) +
                                 " (epoch " + std::to_string(epoch) + "): total=" + fmt(v_total) +
                                 " tri=" + fmt(v_tri) + " rm=" + show(need_mix, v_rm) +
                                 " adv=" + show(need_adv, v_adv) +
                                 " sem=" + show(need_heads, v_sem) +
                                 " gen=" + show(need_heads, v_gen));
      }

      g.backward(total);
      std::vector<std::pair<Tensor*, const Tensor*>> updates;
      updates.reserve(kNumWeights);
      for (int i = 0; i < kNumWeights; ++i)
        updates.emplace_back(&result.params.weights[i], &g.grad(m.w[i]));
      adam.step(updates, ModelParams::names());
      result.params.step++;

      acc_total += v_total;
      acc_tri += v_tri;
      acc_rm += v_rm;
      acc_adv += v_adv;
      acc_sem += v_sem;
      acc_gen += v_gen;
      stats.steps++;
      global_step++;
    }

    if (stats.steps > 0) {
      stats.total = acc_total / stats.steps;
      stats.tri = acc_tri / stats.steps;
      stats.rm = acc_rm / stats.steps;
      stats.adv = acc_adv / stats.steps;
      stats.sem = acc_sem / stats.steps;
      stats.gen = acc_gen / stats.steps;
    }
    result.log.push_back(stats);
  }
  return result;
}

void write_train_log(const std::vector<EpochStats>& log, std::ostream& out) {
  out << "epoch,steps,total,tri,rm,adv,sem,gen\n";
  for (const EpochStats& e : log)
    out << e.epoch << ',' << e.steps << ',' << fmt(e.total) << ',' << fmt(e.tri) << ','
        << fmt(e.rm) << ',' << fmt(e.adv) << ',' << fmt(e.sem) << ',' << fmt(e.gen) << '\n';
}

std::vector<SuiteRow> run_experiment_suite(const Corpus& corpus, const TrainConfig& base, int q,
                                           int t) {
  std::vector<SuiteRow> rows;
  auto run = [&](const std::string& name, const TrainConfig& cfg) {
    const TrainResult r = train(corpus, cfg);
    rows.push_back({name, evaluate(r.params, corpus, q, t, base.seed)});
  };
  {
    TrainConfig c = base;
    c.weights.lambda1 = 0.0;
    c.weights.lambda2 = 0.0;
    run("source_only", c);
  }
  for (const char* variant : {"rm_s", "rm_st"})
    for (int s = 1; s <= kNumStrategies; ++s) {
      TrainConfig c = base;
      c.variant = variant;
      c.strategy = "rm" + std::to_string(s);
      run(std::string(variant) + "_" + std::to_string(s), c);
    }
  {
    TrainConfig c = base;
    c.oracle = true;
    c.weights.lambda1 = 0.0;
    c.weights.lambda2 = 0.0;
    run("oracle", c);
  }
  return rows;
}

void write_suite_csv(const std::vector<SuiteRow>& rows, std::ostream& out) {
  out << "name,medr,r1,r5,r10,r50\n";
  for (const SuiteRow& r : rows)
    out << r.name << ',' << fmt(r.report.medr) << ',' << fmt(r.report.r1) << ','
        << fmt(r.report.r5) << ',' << fmt(r.report.r10) << ',' << fmt(r.report.r50) << '\n';
}

namespace {

Tensor draw_rows(Rng& rng, int b, int d, double min_norm = 0.5) {
  Tensor t({b, d});
  for (int i = 0; i < b; ++i) {
    for (;;) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) {
        t.at(i, j) = 2.0 * rng.uniform() - 1.0;
        s += t.at(i, j) * t.at(i, j);
      }
      if (std::sqrt(s) >= min_norm) break;
    }
  }
  return t;
}

double row_cos(const Tensor& a, int i, const Tensor& b, int j) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int c = 0; c < a.cols(); ++c) {
    dot += a.at(i, c) * b.at(j, c);
    na += a.at(i, c) * a.at(i, c);
    nb += b.at(j, c) * b.at(j, c);
  }
  return dot / std::sqrt(na * nb);
}

double mean_gap(const Tensor& a, const Tensor& b) {
  const int d = a.cols();
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    double ma = 0.0, mb = 0.0;
    for (int i = 0; i < a.rows(); ++i) ma += a.at(i, j);
    for (int i = 0; i < b.rows(); ++i) mb += b.at(i, j);
    ma /= a.rows();
    mb /= b.rows();
    s += (ma - mb) * (ma - mb);
  }
  return std::sqrt(s);
}

constexpr double kKinkMargin = 1e-3;

}  // namespace

std::vector<LossCheckRow> loss_gradcheck_battery(uint64_t seed, int points) {
  if (points < 1) throw std::invalid_argument("loss_gradcheck_battery: points must be >= 1");
  const int b = 4, d = 5;
  ModelDims dims;
  dims.d_f = 6;
  dims.d_img = 4;
  dims.h = 5;
  dims.d_e = d;
  dims.labels = 6;
  const double alpha = LossWeights{}.alpha;

  std::vector<LossCheckRow> rows;
  auto record = [&](const std::string& loss, const std::function<double(Rng&)>& one_point) {
    LossCheckRow row{loss, 0.0, points};
    Rng rng(seed);
    for (int p = 0; p < points; ++p) {
      Rng point_rng = rng.fork(loss, static_cast<uint64_t>(p));
      row.max_rel_error = std::max(row.max_rel_error, one_point(point_rng));
    }
    rows.push_back(row);
  };

  record("triplet", [&](Rng& rng) {
    Tensor a, p, n;
    for (;;) {  // redraw while any hinge margin sits near its kink
      a = draw_rows(rng, b, d);
      p = draw_rows(rng, b, d);
      n = draw_rows(rng, b, d);
      bool clear = true;
      for (int i = 0; i < b; ++i)
        if (std::fabs(row_cos(a, i, n, i) - row_cos(a, i, p, i) + alpha) < kKinkMargin)
          clear = false;
      if (clear) break;
    }
    GradCheckProblem prob;
    prob.inputs = {a, p, n};
    prob.build = [&](Graph& g, const std::vector<Var>& in) {
      return triplet_loss(g, in[0], in[1], in[2], alpha);
    };
    return grad_check(prob).max_rel_error;
  });

  record("adversarial", [&](Rng& rng) {
    const ModelParams mp = init_params(dims, rng.next_u64());
    Tensor es, et;
    for (;;) {  // probabilities must sit clear of the clamp bounds
      es = draw_rows(rng, b, d);
      et = draw_rows(rng, b, d);
      const Tensor ps = discriminate(mp, es);
      const Tensor pt = discriminate(mp, et);
      bool clear = true;
      for (const Tensor* t : {&ps, &pt})
        for (double v : t->data())
          if (v < 1e-7 + kKinkMargin || v > 1.0 - 1e-7 - kKinkMargin) clear = false;
      if (clear) break;
    }
    GradCheckProblem prob;
    prob.inputs = {es, et, mp.at(kDiscW1), mp.at(kDiscB1), mp.at(kDiscW2), mp.at(kDiscB2)};
    prob.build = [&](Graph& g, const std::vector<Var>& in) {
      std::vector<Var> wv(kNumWeights);
      for (int i = 0; i < kNumWeights; ++i) wv[i] = g.constant(mp.weights[i]);
      wv[kDiscW1] = in[2];
      wv[kDiscB1] = in[3];
      wv[kDiscW2] = in[4];
      wv[kDiscB2] = in[5];
      const ModelGraph m = bind_vars(g, dims, wv);
      return adversarial_value(g, m, in[0], in[1]);
    };
    return grad_check(prob).max_rel_error;
  });

  record("semantic", [&](Rng& rng) {
    Tensor probs({b, dims.labels});
    for (double& v : probs.data()) v = 0.1 + 0.8 * rng.uniform();  // clear of both clamps
    Tensor targets({b, dims.labels});
    for (double& v : targets.data()) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    GradCheckProblem prob;
    prob.inputs = {probs};
    prob.build = [&](Graph& g, const std::vector<Var>& in) {
      return semantic_loss(g, in[0], targets);
    };
    return grad_check(prob).max_rel_error;
  });

  record("generation", [&](Rng& rng) {
    GradCheckProblem prob;
    prob.inputs = {draw_rows(rng, b, dims.d_img, 0.0), draw_rows(rng, b, dims.d_img, 0.0)};
    prob.build = [&](Graph& g, const std::vector<Var>& in) {
      return generation_loss(g, in[0], in[1]);
    };
    return grad_check(prob).max_rel_error;
  });

  const auto rm_point = [&](Rng& rng, auto builder) {
    Tensor s, t, m1, m2;
    for (;;) {  // the three mean gaps feed l2norm; keep them off its kink
      s = draw_rows(rng, b, d);
      t = draw_rows(rng, b, d);
      m1 = draw_rows(rng, b, d);
      m2 = draw_rows(rng, b, d);
      if (mean_gap(s, t) > kKinkMargin && mean_gap(s, m1) > kKinkMargin &&
          mean_gap(t, m1) > kKinkMargin && mean_gap(s, m2) > kKinkMargin &&
          mean_gap(t, m2) > kKinkMargin)
        break;
    }
    GradCheckProblem prob;
    prob.inputs = {s, t, m1, m2};
    prob.build = builder;
    return grad_check(prob).max_rel_error;
  };
  record("rm_s", [&](Rng& rng) {
    return rm_point(rng, [](Graph& g, const std::vector<Var>& in) {
      return mixup_loss_s(g, in[0], in[1], in[2]);
    });
  });
  record("rm_t", [&](Rng& rng) {
    return rm_point(rng, [](Graph& g, const std::vector<Var>& in) {
      return mixup_loss_t(g, in[0], in[1], in[2]);
    });
  });
  record("rm_st", [&](Rng& rng) {
    return rm_point(rng, [](Graph& g, const std::vector<Var>& in) {
      return mixup_loss_st(g, in[0], in[1], in[2], in[3]);
    });
  });
  return rows;
}

}  // namespace rmix
