#ifndef RMIX_MODEL_HPP_
#define RMIX_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "rmix/corpus.hpp"
#include "rmix/graph.hpp"
#include "rmix/tensor.hpp"

namespace rmix {

struct ModelDims {
  int d_f = 64;
  int d_img = 32;
  int h = 128;
  int d_e = 32;
  int labels = 1000;

  void validate() const;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Canonical weight order; Adam slots, checkpoints, and graph bindings all
// index weights this way.
enum WeightIx {
  kTiW, kTiB, kIngW, kIngB, kInsW, kInsB, kFuseW, kFuseB,
  kImgW1, kImgB1, kImgW2, kImgB2,
  kDiscW1, kDiscB1, kDiscW2, kDiscB2,
  kDecW, kDecB,
  kGenW1, kGenB1, kGenW2, kGenB2,
  kNumWeights
};

struct ModelParams {
  ModelDims dims;
  uint64_t seed = 0;
  int64_t step = 0;  // optimizer steps applied so far
  std::vector<Tensor> weights;  // canonical order, size kNumWeights

  static const std::vector<std::string>& names();
  Tensor& at(WeightIx ix) { return weights[ix]; }
  const Tensor& at(WeightIx ix) const { return weights[ix]; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases,
// drawn in canonical order from the seed.
ModelParams init_params(const ModelDims& dims, uint64_t seed);

// Weight handles inside one graph, canonical order.
struct ModelGraph {
  Graph* g = nullptr;
  ModelDims dims;
  std::vector<Var> w;
};

ModelGraph bind(Graph& g, const ModelParams& params, bool requires_grad);
ModelGraph bind_vars(Graph& g, const ModelDims& dims, const std::vector<Var>& weight_vars);

// Recipe embedding before row normalization; fusion is linear over the three
// projected sections.
Var encode_recipe_prenorm(const ModelGraph& m, Var e_ti, Var e_ing, Var e_ins);
Var encode_recipe(const ModelGraph& m, Var e_ti, Var e_ing, Var e_ins);  // {B,d_e}, unit rows
Var encode_image(const ModelGraph& m, Var img);                          // {B,d_e}, unit rows
Var discriminate(const ModelGraph& m, Var emb);                          // {B,1} in (0,1)
Var decode_ingredients(const ModelGraph& m, Var emb);                    // {B,labels} in (0,1)
Var generate_image_feature(const ModelGraph& m, Var emb);                // {B,d_img}

enum class Modality { recipe = 0, image = 1 };

struct EmbeddingBatch {
  Tensor rows;  // {B, d_e}, unit rows
  Domain domain = Domain::source;
  Modality modality = Modality::recipe;
  bool mixed = false;
};

// Evaluation-time wrappers over a throwaway graph.
Tensor encode_recipe(const ModelParams& p, const Tensor& e_ti, const Tensor& e_ing,
                     const Tensor& e_ins);
Tensor encode_image(const ModelParams& p, const Tensor& img);
Tensor discriminate(const ModelParams& p, const Tensor& emb);
Tensor decode_ingredients(const ModelParams& p, const Tensor& emb);
Tensor generate_image_feature(const ModelParams& p, const Tensor& emb);

// JSON checkpoint; load(save(p)) == p.
void save_params(const ModelParams& p, const std::string& path);
ModelParams load_params(const std::string& path);

}  // namespace rmix

#endif  // RMIX_MODEL_HPP_
