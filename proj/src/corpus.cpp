#include "rmix/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "rmix/kmeans.hpp"

namespace rmix {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& why) {
  throw std::invalid_argument("CorpusConfig." + field + ": " + why);
}

void require_nonneg(double v, const std::string& field) {
  if (v < 0.0) config_error(field, "must be >= 0");
}

}  // namespace

void CorpusConfig::validate() const {
  if (n_source < 1) config_error("n_source", "must be >= 1");
  if (n_target < 1) config_error("n_target", "must be >= 1");
  if (n_test < 1) config_error("n_test", "must be >= 1");
  if (v_common < 1) config_error("v_common", "must be >= 1");
  if (v_source_unique < 0) config_error("v_source_unique", "must be >= 0");
  if (v_target_unique < 0) config_error("v_target_unique", "must be >= 0");
  if (d_f < 1) config_error("d_f", "must be >= 1");
  if (d_img < 1) config_error("d_img", "must be >= 1");
  require_nonneg(sigma_title, "sigma_title");
  require_nonneg(sigma_ing, "sigma_ing");
  require_nonneg(sigma_ins, "sigma_ins");
  require_nonneg(sigma_mt, "sigma_mt");
  require_nonneg(sigma_img, "sigma_img");
  require_nonneg(zipf_source, "zipf_source");
  require_nonneg(zipf_target, "zipf_target");
  if (k_min < 1) config_error("k_min", "must be >= 1");
  if (k_max < k_min) config_error("k_max", "must be >= k_min");
  if (k_max > v_common + v_source_unique)
    config_error("k_max", "exceeds the source vocabulary size");
  if (k_max > v_common + v_target_unique)
    config_error("k_max", "exceeds the target vocabulary size");
  if (unify_clusters < 0) config_error("unify_clusters", "must be >= 0");
  if (unify_iters < 1) config_error("unify_iters", "must be >= 1");
}

std::string to_string(Split s) {
  switch (s) {
    case Split::source_train: return "source_train";
    case Split::target_train: return "target_train";
    case Split::target_test: return "target_test";
  }
  throw std::logic_error("bad Split");
}

std::string to_string(LangTag t) {
  switch (t) {
    case LangTag::source_language: return "source_language";
    case LangTag::target_language: return "target_language";
    case LangTag::translated: return "translated";
  }
  throw std::logic_error("bad LangTag");
}

Split split_from_string(const std::string& s) {
  if (s == "source_train") return Split::source_train;
  if (s == "target_train") return Split::target_train;
  if (s == "target_test") return Split::target_test;
  throw std::invalid_argument("unknown split '" + s + "'");
}

LangTag lang_from_string(const std::string& s) {
  if (s == "source_language") return LangTag::source_language;
  if (s == "target_language") return LangTag::target_language;
  if (s == "translated") return LangTag::translated;
  throw std::invalid_argument("unknown language tag '" + s + "'");
}

std::vector<int> Codebook::vocab() const {
  std::vector<int> ids;
  ids.reserve(vocab_size());
  for (int id = 0; id < v_common; ++id) ids.push_back(id);
  for (int id = unique_lo; id < unique_hi; ++id) ids.push_back(id);
  return ids;
}

int Codebook::position(int id) const {
  if (id >= 0 && id < v_common) return id;
  if (id >= unique_lo && id < unique_hi) return v_common + (id - unique_lo);
  throw std::invalid_argument("Codebook(" + language + "): ingredient " + std::to_string(id) +
                              " not covered");
}

std::vector<int> Corpus::split_index(Split s) const {
  std::vector<int> idx;
  for (size_t i = 0; i < recipes.size(); ++i)
    if (recipes[i].split == s) idx.push_back(static_cast<int>(i));
  return idx;
}

namespace {

Tensor mean_of_rows(const Tensor& table, const std::vector<int>& rows, int d) {
  Tensor out({d});
  for (int r : rows)
    for (int c = 0; c < d; ++c) out.at(c) += table.at(r, c);
  for (int c = 0; c < d; ++c) out.at(c) /= static_cast<double>(rows.size());
  return out;
}

void add_noise(Tensor& t, double sigma, Rng& rng) {
  for (auto& x : t.data()) x += sigma * rng.normal();
}

// Sections from per-ingredient vectors already resolved to rows of `table`.
// Noise draw order is fixed: title, ingredients, instructions.
RecipeFeatures sections_from_rows(const Tensor& table, const std::vector<int>& member_rows,
                                  const std::vector<int>& main_rows, double style,
                                  const Tensor& style_dir, const Tensor& style_base,
                                  const CorpusConfig& cfg, Rng& rng) {
  RecipeFeatures f;
  f.e_ti = mean_of_rows(table, main_rows, cfg.d_f);
  add_noise(f.e_ti, cfg.sigma_title, rng);
  f.e_ing = mean_of_rows(table, member_rows, cfg.d_f);
  add_noise(f.e_ing, cfg.sigma_ing, rng);
  f.e_ins = Tensor({cfg.d_f});
  for (int c = 0; c < cfg.d_f; ++c)
    f.e_ins.at(c) = 0.5 * f.e_ing.at(c) + style * style_dir.at(c) + style_base.at(c);
  add_noise(f.e_ins, cfg.sigma_ins, rng);
  return f;
}

void check_latent(const RecipeLatent& latent, const char* op) {
  if (latent.ingredients.empty())
    throw std::invalid_argument(std::string(op) + ": empty ingredient set");
  if (latent.mains.empty())
    throw std::invalid_argument(std::string(op) + ": empty main-ingredient subset");
}

}  // namespace

RecipeFeatures extract_features(const RecipeLatent& latent, const Codebook& cb,
                                const CorpusConfig& cfg, Rng& rng) {
  check_latent(latent, "extract_features");
  for (int id : latent.ingredients)
    if (!cb.covers(id))
      throw std::invalid_argument("extract_features: ingredient " + std::to_string(id) +
                                  " not in the " + cb.language + " codebook");
  RecipeFeatures f = sections_from_rows(cb.vectors, latent.ingredients, latent.mains,
                                        latent.style, cb.style_dir, cb.style_base, cfg, rng);
  f.lang = cb.language == "source" ? LangTag::source_language : LangTag::target_language;
  return f;
}

int nearest_common(const Codebook& target_cb, int unique_id) {
  if (!(unique_id >= target_cb.unique_lo && unique_id < target_cb.unique_hi))
    throw std::invalid_argument("nearest_common: " + std::to_string(unique_id) +
                                " is not a unique ingredient of the " + target_cb.language +
                                " codebook");
  if (target_cb.v_common < 1)
    throw std::invalid_argument("nearest_common: codebook has no common ingredients");
  const int d = target_cb.vectors.cols();
  int best = 0;
  double bestd = 0.0;
  for (int c = 0; c < target_cb.v_common; ++c) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      const double diff = target_cb.vectors.at(unique_id, j) - target_cb.vectors.at(c, j);
      s += diff * diff;
    }
    if (c == 0 || s < bestd) {
      bestd = s;
      best = c;
    }
  }
  return best;
}

RecipeFeatures translate_features(const RecipeLatent& latent, const Codebook& source_cb,
                                  const Codebook& target_cb, const CorpusConfig& cfg, Rng& rng) {
  check_latent(latent, "translate_features");
  if (latent.domain != Domain::target)
    throw std::invalid_argument("translate_features: latent is not a target-domain recipe");

  // Resolve every distinct member once so mains reuse the same substitution.
  const int n = static_cast<int>(latent.ingredients.size());
  Tensor resolved({n, cfg.d_f});
  std::vector<int> member_rows(n), main_rows;
  for (int i = 0; i < n; ++i) {
    const int id = latent.ingredients[i];
    member_rows[i] = i;
    if (id < source_cb.v_common) {
      for (int c = 0; c < cfg.d_f; ++c) resolved.at(i, c) = source_cb.vectors.at(id, c);
    } else {
      const int sub = nearest_common(target_cb, id);
      for (int c = 0; c < cfg.d_f; ++c)
        resolved.at(i, c) = source_cb.vectors.at(sub, c) + 2.0 * cfg.sigma_mt * rng.normal();
    }
  }
  for (int m : latent.mains) {
    int row = -1;
    for (int i = 0; i < n; ++i)
      if (latent.ingredients[i] == m) {
        row = i;
        break;
      }
    if (row < 0)
      throw std::invalid_argument("translate_features: main ingredient " + std::to_string(m) +
                                  " not among the members");
    main_rows.push_back(row);
  }

  RecipeFeatures f = sections_from_rows(resolved, member_rows, main_rows, latent.style,
                                        source_cb.style_dir, source_cb.style_base, cfg, rng);
  add_noise(f.e_ti, cfg.sigma_mt, rng);
  add_noise(f.e_ing, cfg.sigma_mt, rng);
  add_noise(f.e_ins, cfg.sigma_mt, rng);
  f.lang = LangTag::translated;
  return f;
}

Tensor translate_codebook(const Codebook& source_cb, const Codebook& target_cb, double sigma_mt,
                          Rng& rng) {
  const int d = source_cb.vectors.cols();
  const std::vector<int> vocab = target_cb.vocab();
  Tensor out({static_cast<int>(vocab.size()), d});
  for (size_t p = 0; p < vocab.size(); ++p) {
    const int id = vocab[p];
    if (id < target_cb.v_common) {
      for (int c = 0; c < d; ++c) out.at(static_cast<int>(p), c) = source_cb.vectors.at(id, c);
    } else {
      const int sub = nearest_common(target_cb, id);
      for (int c = 0; c < d; ++c)
        out.at(static_cast<int>(p), c) =
            source_cb.vectors.at(sub, c) + 2.0 * sigma_mt * rng.normal();
    }
  }
  return out;
}

UnifiedVocabulary unify_ingredients(const Tensor& stacked, int n_source_vocab, int n_target_vocab,
                                    int k, int max_iters, uint64_t seed) {
  if (stacked.rows() != n_source_vocab + n_target_vocab)
    throw std::invalid_argument("unify_ingredients: row count " + std::to_string(stacked.rows()) +
                                " does not match vocab sizes " + std::to_string(n_source_vocab) +
                                "+" + std::to_string(n_target_vocab));
  if (k > stacked.rows())
    throw std::invalid_argument("unify_ingredients: k=" + std::to_string(k) +
                                " exceeds vector count " + std::to_string(stacked.rows()));
  KMeansResult km = kmeans(stacked, k, max_iters, seed);
  UnifiedVocabulary uv;
  uv.k = k;
  uv.centroids = std::move(km.centroids);
  uv.source_assignment.assign(km.assignment.begin(), km.assignment.begin() + n_source_vocab);
  uv.target_assignment.assign(km.assignment.begin() + n_source_vocab, km.assignment.end());
  return uv;
}

namespace {

Codebook build_codebook(const std::string& language, int universe, int v_common, int unique_lo,
                        int unique_hi, int d_f, Rng rng) {
  Codebook cb;
  cb.language = language;
  cb.v_common = v_common;
  cb.unique_lo = unique_lo;
  cb.unique_hi = unique_hi;
  cb.vectors = Tensor({universe, d_f});
  for (int id : cb.vocab())
    for (int c = 0; c < d_f; ++c) cb.vectors.at(id, c) = rng.normal();
  cb.style_dir = Tensor::gaussian({d_f}, 0.0, 1.0, rng);
  cb.style_base = Tensor::gaussian({d_f}, 0.0, 1.0, rng);
  return cb;
}

struct ZipfTable {
  std::vector<double> cdf;  // over vocab positions
};

// Ranks are assigned to vocab positions by a seeded permutation, then
// weight(rank r) = 1 / (r+1)^skew.
ZipfTable zipf_table(int vocab, double skew, Rng rng) {
  ZipfTable z;
  const std::vector<int> rank_of_pos = rng.permutation(vocab);
  z.cdf.resize(vocab);
  double total = 0.0;
  for (int p = 0; p < vocab; ++p) {
    total += 1.0 / std::pow(static_cast<double>(rank_of_pos[p] + 1), skew);
    z.cdf[p] = total;
  }
  for (auto& c : z.cdf) c /= total;
  return z;
}

int zipf_draw(const ZipfTable& z, Rng& rng) {
  const double u = rng.uniform();
  int lo = 0, hi = static_cast<int>(z.cdf.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (z.cdf[mid] <= u)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo;
}

RecipeLatent sample_latent(Domain dom, const CorpusConfig& cfg, const ZipfTable& zipf,
                           const Codebook& cb, Rng& rng) {
  RecipeLatent latent;
  latent.domain = dom;
  const std::vector<int> vocab = cb.vocab();
  const int k = cfg.k_min + rng.uniform_int(cfg.k_max - cfg.k_min + 1);
  while (static_cast<int>(latent.ingredients.size()) < k) {
    const int id = vocab[zipf_draw(zipf, rng)];
    bool dup = false;
    for (int existing : latent.ingredients)
      if (existing == id) dup = true;
    if (!dup) latent.ingredients.push_back(id);
  }
  int n_main = 1 + rng.uniform_int(2);
  if (n_main > k) n_main = k;
  for (int i : rng.sample_without_replacement(k, n_main))
    latent.mains.push_back(latent.ingredients[i]);
  latent.style = 2.0 * rng.uniform() - 1.0;
  return latent;
}

Tensor image_for(const RecipeLatent& latent, const Tensor& image_map, double sigma_img,
                 Rng& rng) {
  const int d_img = image_map.rows();
  Tensor img({d_img});
  for (int id : latent.ingredients)
    for (int r = 0; r < d_img; ++r) img.at(r) += image_map.at(r, id);
  add_noise(img, sigma_img, rng);
  return img;
}

std::vector<int> labels_for(const RecipeLatent& latent, const Codebook& cb,
                            const std::vector<int>& assignment) {
  std::vector<int> out;
  for (int id : latent.ingredients) out.push_back(assignment[cb.position(id)]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

Corpus generate_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  const int U = cfg.universe();
  Corpus corpus;
  corpus.config = cfg;

  Rng root(cfg.seed);
  corpus.source_cb = build_codebook("source", U, cfg.v_common, cfg.v_common,
                                    cfg.v_common + cfg.v_source_unique, cfg.d_f,
                                    root.fork("codebook_source"));
  corpus.target_cb = build_codebook("target", U, cfg.v_common, cfg.v_common + cfg.v_source_unique,
                                    U, cfg.d_f, root.fork("codebook_target"));
  {
    Rng im = root.fork("image_map");
    corpus.image_map = Tensor::gaussian({cfg.d_img, U}, 0.0, 1.0, im);
  }

  const ZipfTable zipf_s =
      zipf_table(corpus.source_cb.vocab_size(), cfg.zipf_source, root.fork("zipf_source"));
  const ZipfTable zipf_t =
      zipf_table(corpus.target_cb.vocab_size(), cfg.zipf_target, root.fork("zipf_target"));

  const int total = cfg.n_source + cfg.n_target + cfg.n_test;
  corpus.recipes.reserve(total);
  for (int idx = 0; idx < total; ++idx) {
    Recipe r;
    r.id = idx;
    Rng latent_rng = root.fork("latent", static_cast<uint64_t>(idx));
    Rng noise_rng = root.fork("noise", static_cast<uint64_t>(idx));
    if (idx < cfg.n_source) {
      r.split = Split::source_train;
      r.latent = sample_latent(Domain::source, cfg, zipf_s, corpus.source_cb, latent_rng);
      r.features = extract_features(r.latent, corpus.source_cb, cfg, noise_rng);
      r.image = image_for(r.latent, corpus.image_map, cfg.sigma_img, noise_rng);
      r.has_image = true;
    } else {
      r.split = idx < cfg.n_source + cfg.n_target ? Split::target_train : Split::target_test;
      r.latent = sample_latent(Domain::target, cfg, zipf_t, corpus.target_cb, latent_rng);
      r.features = translate_features(r.latent, corpus.source_cb, corpus.target_cb, cfg,
                                      noise_rng);
      if (r.split == Split::target_test) {
        r.image = image_for(r.latent, corpus.image_map, cfg.sigma_img, noise_rng);
        r.has_image = true;
      }
    }
    corpus.recipes.push_back(std::move(r));
  }

  const int nsv = corpus.source_cb.vocab_size();
  const int ntv = corpus.target_cb.vocab_size();
  Tensor stacked({nsv + ntv, cfg.d_f});
  {
    const std::vector<int> svocab = corpus.source_cb.vocab();
    for (int p = 0; p < nsv; ++p)
      for (int c = 0; c < cfg.d_f; ++c)
        stacked.at(p, c) = corpus.source_cb.vectors.at(svocab[p], c);
    Rng ut = root.fork("unify_translate");
    const Tensor translated =
        translate_codebook(corpus.source_cb, corpus.target_cb, cfg.sigma_mt, ut);
    for (int p = 0; p < ntv; ++p)
      for (int c = 0; c < cfg.d_f; ++c) stacked.at(nsv + p, c) = translated.at(p, c);
  }
  const int k = cfg.unify_clusters == 0 ? U : cfg.unify_clusters;
  corpus.unified =
      unify_ingredients(stacked, nsv, ntv, k, cfg.unify_iters, root.fork("unify").seed());

  for (Recipe& r : corpus.recipes) {
    const bool src = r.latent.domain == Domain::source;
    r.labels = labels_for(r.latent, src ? corpus.source_cb : corpus.target_cb,
                          src ? corpus.unified.source_assignment
                              : corpus.unified.target_assignment);
  }
  return corpus;
}

namespace {

json tensor_to_json(const Tensor& t) {
  return json{{"shape", t.shape()}, {"data", t.data()}};
}

Tensor tensor_from_json(const json& j, const char* name, int line) {
  if (!j.contains("shape") || !j.contains("data"))
    throw std::runtime_error("corpus line " + std::to_string(line) + ": field '" + name +
                             "' needs shape and data");
  return Tensor(j.at("shape").get<std::vector<int>>(), j.at("data").get<std::vector<double>>());
}

const json& need(const json& j, const char* name, int line) {
  if (!j.contains(name))
    throw std::runtime_error("corpus line " + std::to_string(line) + ": missing field '" + name +
                             "'");
  return j.at(name);
}

Tensor vec_from_json(const json& j, const char* name, int line, int want_dim) {
  const auto arr = need(j, name, line).get<std::vector<double>>();
  if (static_cast<int>(arr.size()) != want_dim)
    throw std::runtime_error("corpus line " + std::to_string(line) + ": field '" + name +
                             "' has length " + std::to_string(arr.size()) + ", expected " +
                             std::to_string(want_dim));
  return Tensor({want_dim}, arr);
}

json config_to_json(const CorpusConfig& c) {
  return json{{"seed", c.seed},
              {"n_source", c.n_source},
              {"n_target", c.n_target},
              {"n_test", c.n_test},
              {"v_common", c.v_common},
              {"v_source_unique", c.v_source_unique},
              {"v_target_unique", c.v_target_unique},
              {"d_f", c.d_f},
              {"d_img", c.d_img},
              {"sigma_title", c.sigma_title},
              {"sigma_ing", c.sigma_ing},
              {"sigma_ins", c.sigma_ins},
              {"sigma_mt", c.sigma_mt},
              {"sigma_img", c.sigma_img},
              {"zipf_source", c.zipf_source},
              {"zipf_target", c.zipf_target},
              {"k_min", c.k_min},
              {"k_max", c.k_max},
              {"unify_clusters", c.unify_clusters},
              {"unify_iters", c.unify_iters}};
}

CorpusConfig config_from_json(const json& j, int line) {
  CorpusConfig c;
  c.seed = need(j, "seed", line).get<uint64_t>();
  c.n_source = need(j, "n_source", line).get<int>();
  c.n_target = need(j, "n_target", line).get<int>();
  c.n_test = need(j, "n_test", line).get<int>();
  c.v_common = need(j, "v_common", line).get<int>();
  c.v_source_unique = need(j, "v_source_unique", line).get<int>();
  c.v_target_unique = need(j, "v_target_unique", line).get<int>();
  c.d_f = need(j, "d_f", line).get<int>();
  c.d_img = need(j, "d_img", line).get<int>();
  c.sigma_title = need(j, "sigma_title", line).get<double>();
  c.sigma_ing = need(j, "sigma_ing", line).get<double>();
  c.sigma_ins = need(j, "sigma_ins", line).get<double>();
  c.sigma_mt = need(j, "sigma_mt", line).get<double>();
  c.sigma_img = need(j, "sigma_img", line).get<double>();
  c.zipf_source = need(j, "zipf_source", line).get<double>();
  c.zipf_target = need(j, "zipf_target", line).get<double>();
  c.k_min = need(j, "k_min", line).get<int>();
  c.k_max = need(j, "k_max", line).get<int>();
  c.unify_clusters = need(j, "unify_clusters", line).get<int>();
  c.unify_iters = need(j, "unify_iters", line).get<int>();
  return c;
}

json codebook_to_json(const Codebook& cb) {
  return json{{"language", cb.language},
              {"v_common", cb.v_common},
              {"unique_lo", cb.unique_lo},
              {"unique_hi", cb.unique_hi},
              {"vectors", tensor_to_json(cb.vectors)},
              {"style_dir", cb.style_dir.data()},
              {"style_base", cb.style_base.data()}};
}

Codebook codebook_from_json(const json& j, int line, int d_f) {
  Codebook cb;
  cb.language = need(j, "language", line).get<std::string>();
  cb.v_common = need(j, "v_common", line).get<int>();
  cb.unique_lo = need(j, "unique_lo", line).get<int>();
  cb.unique_hi = need(j, "unique_hi", line).get<int>();
  cb.vectors = tensor_from_json(need(j, "vectors", line), "vectors", line);
  cb.style_dir = vec_from_json(j, "style_dir", line, d_f);
  cb.style_base = vec_from_json(j, "style_base", line, d_f);
  return cb;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_corpus: cannot open " + path);

  json header{{"type", "header"},
              {"config", config_to_json(corpus.config)},
              {"source_codebook", codebook_to_json(corpus.source_cb)},
              {"target_codebook", codebook_to_json(corpus.target_cb)},
              {"image_map", tensor_to_json(corpus.image_map)},
              {"unified",
               json{{"k", corpus.unified.k},
                    {"source_assignment", corpus.unified.source_assignment},
                    {"target_assignment", corpus.unified.target_assignment},
                    {"centroids", tensor_to_json(corpus.unified.centroids)}}}};
  out << header.dump() << "\n";

  for (const Recipe& r : corpus.recipes) {
    json rec{{"type", "recipe"},
             {"id", r.id},
             {"split", to_string(r.split)},
             {"domain", r.latent.domain == Domain::source ? "source" : "target"},
             {"ingredients", r.latent.ingredients},
             {"mains", r.latent.mains},
             {"style", r.latent.style},
             {"lang", to_string(r.features.lang)},
             {"e_ti", r.features.e_ti.data()},
             {"e_ing", r.features.e_ing.data()},
             {"e_ins", r.features.e_ins.data()},
             {"labels", r.labels}};
    if (r.has_image) rec["image"] = r.image.data();
    out << rec.dump() << "\n";
  }
  if (!out) throw std::runtime_error("save_corpus: write failed for " + path);
}

CorpusConfig load_corpus_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_corpus_config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("load_corpus_config: " + path + ": " + e.what());
  }
  CorpusConfig c;
  auto take = [&](const char* name, auto& field) {
    if (j.contains(name)) field = j.at(name).get<std::decay_t<decltype(field)>>();
  };
  take("seed", c.seed);
  take("n_source", c.n_source);
  take("n_target", c.n_target);
  take("n_test", c.n_test);
  take("v_common", c.v_common);
  take("v_source_unique", c.v_source_unique);
  take("v_target_unique", c.v_target_unique);
  take("d_f", c.d_f);
  take("d_img", c.d_img);
  take("sigma_title", c.sigma_title);
  take("sigma_ing", c.sigma_ing);
  take("sigma_ins", c.sigma_ins);
  take("sigma_mt", c.sigma_mt);
  take("sigma_img", c.sigma_img);
  take("zipf_source", c.zipf_source);
  take("zipf_target", c.zipf_target);
  take("k_min", c.k_min);
  take("k_max", c.k_max);
  take("unify_clusters", c.unify_clusters);
  take("unify_iters", c.unify_iters);
  c.validate();
  return c;
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_corpus: cannot open " + path);

  Corpus corpus;
  std::string linebuf;
  int line = 0;
  bool have_header = false;
  while (std::getline(in, linebuf)) {
    ++line;
    if (linebuf.empty()) continue;
    json j;
    try {
      j = json::parse(linebuf);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("corpus line " + std::to_string(line) + ": " + e.what());
    }
    const std::string type = need(j, "type", line).get<std::string>();
    if (type == "header") {
      if (have_header)
        throw std::runtime_error("corpus line " + std::to_string(line) + ": duplicate header");
      corpus.config = config_from_json(need(j, "config", line), line);
      corpus.config.validate();
      corpus.source_cb =
          codebook_from_json(need(j, "source_codebook", line), line, corpus.config.d_f);
      corpus.target_cb =
          codebook_from_json(need(j, "target_codebook", line), line, corpus.config.d_f);
      corpus.image_map = tensor_from_json(need(j, "image_map", line), "image_map", line);
      const json& uj = need(j, "unified", line);
      corpus.unified.k = need(uj, "k", line).get<int>();
      corpus.unified.source_assignment =
          need(uj, "source_assignment", line).get<std::vector<int>>();
      corpus.unified.target_assignment =
          need(uj, "target_assignment", line).get<std::vector<int>>();
      corpus.unified.centroids = tensor_from_json(need(uj, "centroids", line), "centroids", line);
      have_header = true;
      continue;
    }
    if (type != "recipe")
      throw std::runtime_error("corpus line " + std::to_string(line) + ": unknown record type '" +
                               type + "'");
    if (!have_header)
      throw std::runtime_error("corpus line " + std::to_string(line) + ": recipe before header");

    Recipe r;
    r.id = need(j, "id", line).get<int>();
    r.split = split_from_string(need(j, "split", line).get<std::string>());
    const std::string dom = need(j, "domain", line).get<std::string>();
    if (dom != "source" && dom != "target")
      throw std::runtime_error("corpus line " + std::to_string(line) + ": unknown domain '" +
                               dom + "'");
    r.latent.domain = dom == "source" ? Domain::source : Domain::target;
    r.latent.ingredients = need(j, "ingredients", line).get<std::vector<int>>();
    r.latent.mains = need(j, "mains", line).get<std::vector<int>>();
    r.latent.style = need(j, "style", line).get<double>();
    r.features.lang = lang_from_string(need(j, "lang", line).get<std::string>());
    r.features.e_ti = vec_from_json(j, "e_ti", line, corpus.config.d_f);
    r.features.e_ing = vec_from_json(j, "e_ing", line, corpus.config.d_f);
    r.features.e_ins = vec_from_json(j, "e_ins", line, corpus.config.d_f);
    r.labels = need(j, "labels", line).get<std::vector<int>>();
    if (j.contains("image")) {
      r.image = vec_from_json(j, "image", line, corpus.config.d_img);
      r.has_image = true;
    }
    corpus.recipes.push_back(std::move(r));
  }
  if (!have_header) throw std::runtime_error("load_corpus: no header record in " + path);

  const auto count = [&](Split s) {
    return static_cast<int>(corpus.split_index(s).size());
  };
  if (count(Split::source_train) != corpus.config.n_source)
    throw std::runtime_error("load_corpus: source_train count " +
                             std::to_string(count(Split::source_train)) +
                             " does not match config n_source " +
                             std::to_string(corpus.config.n_source));
  if (count(Split::target_train) != corpus.config.n_target)
    throw std::runtime_error("load_corpus: target_train count " +
                             std::to_string(count(Split::target_train)) +
                             " does not match config n_target " +
                             std::to_string(corpus.config.n_target));
  if (count(Split::target_test) != corpus.config.n_test)
    throw std::runtime_error("load_corpus: target_test count " +
                             std::to_string(count(Split::target_test)) +
                             " does not match config n_test " + std::to_string(corpus.config.n_test));
  return corpus;
}

}  // namespace rmix
