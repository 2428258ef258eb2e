#include "rmix/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "rmix/rng.hpp"

namespace rmix {

using nlohmann::json;

void ModelDims::validate() const {
  if (d_f < 1 || d_img < 1 || h < 1 || d_e < 1 || labels < 1)
    throw std::invalid_argument("ModelDims: all dimensions must be >= 1");
}

const std::vector<std::string>& ModelParams::names() {
  static const std::vector<std::string> kNames = {
      "recipe.ti_w",  "recipe.ti_b",  "recipe.ing_w", "recipe.ing_b",
      "recipe.ins_w", "recipe.ins_b", "recipe.fuse_w", "recipe.fuse_b",
      "image.w1",     "image.b1",     "image.w2",     "image.b2",
      "disc.w1",      "disc.b1",      "disc.w2",      "disc.b2",
      "dec.w",        "dec.b",        "gen.w1",       "gen.b1",
      "gen.w2",       "gen.b2"};
  return kNames;
}

namespace {

Tensor glorot(int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  return Tensor::uniform({fan_in, fan_out}, -bound, bound, rng);
}

std::vector<std::pair<int, int>> weight_shapes(const ModelDims& d) {
  return {
      {d.d_f, d.h},   {0, d.h},      {d.d_f, d.h},   {0, d.h},
      {d.d_f, d.h},   {0, d.h},      {3 * d.h, d.d_e}, {0, d.d_e},
      {d.d_img, d.h}, {0, d.h},      {d.h, d.d_e},   {0, d.d_e},
      {d.d_e, d.h},   {0, d.h},      {d.h, 1},       {0, 1},
      {d.d_e, d.labels}, {0, d.labels},
      {d.d_e, d.h},   {0, d.h},      {d.h, d.d_img}, {0, d.d_img}};
}

}  // namespace

ModelParams init_params(const ModelDims& dims, uint64_t seed) {
  dims.validate();
  ModelParams p;
  p.dims = dims;
  p.seed = seed;
  Rng rng(seed);
  for (const auto& [rows, cols] : weight_shapes(dims)) {
    if (rows == 0)
      p.weights.push_back(Tensor::zeros({cols}));  // bias
    else
      p.weights.push_back(glorot(rows, cols, rng));
  }
  return p;
}

ModelGraph bind(Graph& g, const ModelParams& params, bool requires_grad) {
  if (static_cast<int>(params.weights.size()) != kNumWeights)
    throw std::invalid_argument("bind: params hold " + std::to_string(params.weights.size()) +
                                " weights, expected " + std::to_string(kNumWeights));
  ModelGraph m;
  m.g = &g;
  m.dims = params.dims;
  m.w.reserve(kNumWeights);
  for (const Tensor& t : params.weights) m.w.push_back(g.leaf(t, requires_grad));
  return m;
}

ModelGraph bind_vars(Graph& g, const ModelDims& dims, const std::vector<Var>& weight_vars) {
  if (static_cast<int>(weight_vars.size()) != kNumWeights)
    throw std::invalid_argument("bind_vars: expected " + std::to_string(kNumWeights) +
                                " weight vars");
  ModelGraph m;
  m.g = &g;
  m.dims = dims;
  m.w = weight_vars;
  return m;
}

namespace {

Var affine(const ModelGraph& m, Var x, WeightIx w, WeightIx b) {
  return m.g->add(m.g->matmul(x, m.w[w]), m.w[b]);
}

}  // namespace

Var encode_recipe_prenorm(const ModelGraph& m, Var e_ti, Var e_ing, Var e_ins) {
  Graph& g = *m.g;
  Var h_ti = g.tanh(affine(m, e_ti, kTiW, kTiB));
  Var h_ing = g.tanh(affine(m, e_ing, kIngW, kIngB));
  Var h_ins = g.tanh(affine(m, e_ins, kInsW, kInsB));
  Var cat = g.concat(g.concat(h_ti, h_ing), h_ins);
  return affine(m, cat, kFuseW, kFuseB);
}

Var encode_recipe(const ModelGraph& m, Var e_ti, Var e_ing, Var e_ins) {
  return m.g->unit_rows(encode_recipe_prenorm(m, e_ti, e_ing, e_ins));
}

Var encode_image(const ModelGraph& m, Var img) {
  Graph& g = *m.g;
  Var h = g.tanh(affine(m, img, kImgW1, kImgB1));
  return g.unit_rows(affine(m, h, kImgW2, kImgB2));
}

Var discriminate(const ModelGraph& m, Var emb) {
  Graph& g = *m.g;
  Var h = g.tanh(affine(m, emb, kDiscW1, kDiscB1));
  return g.sigmoid(affine(m, h, kDiscW2, kDiscB2));
}

Var decode_ingredients(const ModelGraph& m, Var emb) {
  return m.g->sigmoid(affine(m, emb, kDecW, kDecB));
}

Var generate_image_feature(const ModelGraph& m, Var emb) {
  Graph& g = *m.g;
  Var h = g.tanh(affine(m, emb, kGenW1, kGenB1));
  return affine(m, h, kGenW2, kGenB2);
}

namespace {

template <typename Build>
Tensor run_pure(const ModelParams& p, Build build) {
  Graph g;
  ModelGraph m = bind(g, p, false);
  return g.value(build(g, m));
}

}  // namespace

Tensor encode_recipe(const ModelParams& p, const Tensor& e_ti, const Tensor& e_ing,
                     const Tensor& e_ins) {
  return run_pure(p, [&](Graph& g, ModelGraph& m) {
    return encode_recipe(m, g.leaf(e_ti, false), g.leaf(e_ing, false), g.leaf(e_ins, false));
  });
}

Tensor encode_image(const ModelParams& p, const Tensor& img) {
  return run_pure(p, [&](Graph& g, ModelGraph& m) { return encode_image(m, g.leaf(img, false)); });
}

Tensor discriminate(const ModelParams& p, const Tensor& emb) {
  return run_pure(p, [&](Graph& g, ModelGraph& m) { return discriminate(m, g.leaf(emb, false)); });
}

Tensor decode_ingredients(const ModelParams& p, const Tensor& emb) {
  return run_pure(p,
                  [&](Graph& g, ModelGraph& m) { return decode_ingredients(m, g.leaf(emb, false)); });
}

Tensor generate_image_feature(const ModelParams& p, const Tensor& emb) {
  return run_pure(
      p, [&](Graph& g, ModelGraph& m) { return generate_image_feature(m, g.leaf(emb, false)); });
}

void save_params(const ModelParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_params: cannot open " + path);
  json weights = json::object();
  for (int i = 0; i < kNumWeights; ++i)
    weights[ModelParams::names()[i]] =
        json{{"shape", p.weights[i].shape()}, {"data", p.weights[i].data()}};
  json j{{"dims",
          json{{"d_f", p.dims.d_f},
               {"d_img", p.dims.d_img},
               {"h", p.dims.h},
               {"d_e", p.dims.d_e},
               {"labels", p.dims.labels}}},
         {"seed", p.seed},
         {"step", p.step},
         {"weights", weights}};
  out << j.dump() << "\n";
  if (!out) throw std::runtime_error("save_params: write failed for " + path);
}

ModelParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_params: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("load_params: " + path + ": " + e.what());
  }
  auto need = [&](const json& o, const char* name) -> const json& {
    if (!o.contains(name))
      throw std::runtime_error("load_params: missing field '" + std::string(name) + "'");
    return o.at(name);
  };
  ModelParams p;
  const json& d = need(j, "dims");
  p.dims.d_f = need(d, "d_f").get<int>();
  p.dims.d_img = need(d, "d_img").get<int>();
  p.dims.h = need(d, "h").get<int>();
  p.dims.d_e = need(d, "d_e").get<int>();
  p.dims.labels = need(d, "labels").get<int>();
  p.dims.validate();
  p.seed = need(j, "seed").get<uint64_t>();
  p.step = need(j, "step").get<int64_t>();
  const json& w = need(j, "weights");
  const auto shapes = weight_shapes(p.dims);
  for (int i = 0; i < kNumWeights; ++i) {
    const std::string& name = ModelParams::names()[i];
    const json& entry = need(w, name.c_str());
    Tensor t(need(entry, "shape").get<std::vector<int>>(),
             need(entry, "data").get<std::vector<double>>());
    const auto [rows, cols] = shapes[i];
    const std::vector<int> want = rows == 0 ? std::vector<int>{cols} : std::vector<int>{rows, cols};
    if (t.shape() != want)
      throw std::runtime_error("load_params: weight '" + name + "' has shape " + t.shape_str() +
                               ", expected " + shape_str(want));
    p.weights.push_back(std::move(t));
  }
  return p;
}

}  // namespace rmix
