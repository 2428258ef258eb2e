#ifndef RMIX_CORPUS_HPP_
#define RMIX_CORPUS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "rmix/rng.hpp"
#include "rmix/tensor.hpp"

namespace rmix {

// Ingredient universe layout: global ids [0, v_common) are shared between the
// two languages, [v_common, v_common + v_source_unique) exist only in the
// source language, and the rest only in the target language.
struct CorpusConfig {
  uint64_t seed = 7;
  int n_source = 2000;  // source recipe-image pairs
  int n_target = 1000;  // target train recipes (no images)
  int n_test = 500;     // target test pairs (images used as queries)
  int v_common = 543;
  int v_source_unique = 384;
  int v_target_unique = 73;
  int d_f = 64;
  int d_img = 32;
  double sigma_title = 0.05;
  double sigma_ing = 0.05;
  double sigma_ins = 0.1;  // instructions carry the most feature noise
  double sigma_mt = 0.1;
  double sigma_img = 0.02;
  double zipf_source = 1.3;
  double zipf_target = 1.6;
  int k_min = 3;
  int k_max = 8;
  int unify_clusters = 0;  // 0 means one cluster per universe ingredient
  int unify_iters = 50;

  int universe() const { return v_common + v_source_unique + v_target_unique; }
  void validate() const;  // throws naming the offending field

  friend bool operator==(const CorpusConfig&, const CorpusConfig&) = default;
};

enum class Domain { source = 0, target = 1 };
enum class Split { source_train = 0, target_train = 1, target_test = 2 };
enum class LangTag { source_language = 0, target_language = 1, translated = 2 };

std::string to_string(Split s);
std::string to_string(LangTag t);
Split split_from_string(const std::string& s);
LangTag lang_from_string(const std::string& s);

struct RecipeLatent {
  Domain domain = Domain::source;
  std::vector<int> ingredients;  // global universe ids
  std::vector<int> mains;        // subset of ingredients behind the title
  double style = 0.0;

  friend bool operator==(const RecipeLatent&, const RecipeLatent&) = default;
};

struct RecipeFeatures {
  Tensor e_ti, e_ing, e_ins;  // each {d_f}
  LangTag lang = LangTag::source_language;

  friend bool operator==(const RecipeFeatures&, const RecipeFeatures&) = default;
};

// Per-language table of fixed ingredient vectors plus the language's
// instruction-style parameters. Rows exist for all universe ids; only covered
// ids are meaningful.
struct Codebook {
  std::string language;  // "source" | "target"
  int v_common = 0;
  int unique_lo = 0, unique_hi = 0;  // global id range of this language's unique ingredients
  Tensor vectors;                    // {universe, d_f}
  Tensor style_dir;                  // {d_f}
  Tensor style_base;                 // {d_f}

  bool covers(int id) const {
    return (id >= 0 && id < v_common) || (id >= unique_lo && id < unique_hi);
  }
  int vocab_size() const { return v_common + (unique_hi - unique_lo); }
  // Covered ids in ascending order; vocab position p maps to vocab()[p].
  std::vector<int> vocab() const;
  int position(int id) const;  // inverse of vocab(); throws if not covered

  friend bool operator==(const Codebook&, const Codebook&) = default;
};

struct UnifiedVocabulary {
  int k = 0;
  std::vector<int> source_assignment;  // per source vocab position
  std::vector<int> target_assignment;  // per target vocab position
  Tensor centroids;                    // {k, d_f}

  friend bool operator==(const UnifiedVocabulary&, const UnifiedVocabulary&) = default;
};

struct Recipe {
  int id = 0;
  Split split = Split::source_train;
  RecipeLatent latent;
  RecipeFeatures features;
  bool has_image = false;
  Tensor image;             // {d_img} when has_image
  std::vector<int> labels;  // sorted unique unified cluster ids

  friend bool operator==(const Recipe&, const Recipe&) = default;
};

struct Corpus {
  CorpusConfig config;
  Codebook source_cb, target_cb;
  Tensor image_map;  // {d_img, universe}, shared across domains
  UnifiedVocabulary unified;
  std::vector<Recipe> recipes;

  std::vector<int> split_index(Split s) const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Sections from a latent through one language's codebook: E_ing is the member
// mean, E_ti the main-ingredient mean, E_ins an affine mix of E_ing and the
// style scalar; each gets its own Gaussian noise draw from rng.
RecipeFeatures extract_features(const RecipeLatent& latent, const Codebook& cb,
                                const CorpusConfig& cfg, Rng& rng);

// Nearest common ingredient to a target-unique one, measured in
// target-codebook space; exhaustive scan, ties to the lowest id.
int nearest_common(const Codebook& target_cb, int unique_id);

// Translation stub: recompute sections in source-codebook space. Common
// ingredients keep their source vectors; target-unique ones substitute their
// nearest common ingredient with doubled translation noise. Each section then
// gets Gaussian(sigma_mt) on top of its regular noise.
RecipeFeatures translate_features(const RecipeLatent& latent, const Codebook& source_cb,
                                  const Codebook& target_cb, const CorpusConfig& cfg, Rng& rng);

// Translated target codebook rows in target vocab position order: source
// vectors for common ids, nearest-common substitutes with doubled noise for
// unique ids.
Tensor translate_codebook(const Codebook& source_cb, const Codebook& target_cb, double sigma_mt,
                          Rng& rng);

// Clusters the stacked vectors (source vocab rows first, then translated
// target vocab rows) and splits the assignment back per language.
UnifiedVocabulary unify_ingredients(const Tensor& stacked, int n_source_vocab, int n_target_vocab,
                                    int k, int max_iters, uint64_t seed);

Corpus generate_corpus(const CorpusConfig& cfg);

// JSON-Lines: one header record carrying config, codebooks, image map, and the
// unified vocabulary, then one record per recipe. Exact double round-trip.
void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path);

// Standalone JSON config file; absent fields keep their defaults.
CorpusConfig load_corpus_config(const std::string& path);

}  // namespace rmix

#endif  // RMIX_CORPUS_HPP_
