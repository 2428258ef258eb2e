#include "rmix/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "rmix/gradcheck.hpp"
#include "rmix/rng.hpp"
#include "test_util.hpp"

using namespace rmix;
using rmixtest::max_abs_diff;
using rmixtest::rnd;

namespace {

ModelDims tiny_dims() {
  ModelDims d;
  d.d_f = 3;
  d.d_img = 4;
  d.h = 5;
  d.d_e = 2;
  d.labels = 6;
  return d;
}

struct SectionBatch {
  Tensor ti, ing, ins;
};

SectionBatch rnd_sections(const ModelDims& d, int b, Rng& rng) {
  return {rnd({b, d.d_f}, rng), rnd({b, d.d_f}, rng), rnd({b, d.d_f}, rng)};
}

double row_norm(const Tensor& t, int i) {
  double s = 0.0;
  for (int j = 0; j < t.cols(); ++j) s += t.at(i, j) * t.at(i, j);
  return std::sqrt(s);
}

Tensor row(const Tensor& t, int i) {
  Tensor out({1, t.cols()});
  for (int j = 0; j < t.cols(); ++j) out.at(0, j) = t.at(i, j);
  return out;
}

ModelParams zero_params(const ModelDims& d) {
  ModelParams p = init_params(d, 1);
  for (auto& w : p.weights)
    for (auto& x : w.data()) x = 0.0;
  return p;
}

}  // namespace

TEST_CASE("init_params is deterministic, Glorot-bounded, zero-biased") {
  const ModelDims d = tiny_dims();
  const ModelParams a = init_params(d, 7);
  const ModelParams b = init_params(d, 7);
  CHECK(a == b);
  CHECK(a.weights.size() == static_cast<size_t>(kNumWeights));
  CHECK(a.step == 0);
  CHECK(a.seed == 7);

  const ModelParams c = init_params(d, 8);
  CHECK(c.at(kTiW).data() != a.at(kTiW).data());

  // bias slots are the odd entries of every layer pair
  for (WeightIx ix : {kTiB, kIngB, kInsB, kFuseB, kImgB1, kImgB2, kDiscB1,
                      kDiscB2, kDecB, kGenB1, kGenB2}) {
    CHECK(a.at(ix).rank() == 1);
    for (double v : a.at(ix).data()) CHECK(v == 0.0);
  }

  // matrices stay inside the Glorot bound and are not degenerate
  for (WeightIx ix : {kTiW, kFuseW, kImgW1, kDiscW2, kDecW, kGenW2}) {
    const Tensor& w = a.at(ix);
    REQUIRE(w.rank() == 2);
    const double bound = std::sqrt(6.0 / (w.rows() + w.cols()));
    double hi = 0.0;
    for (double v : w.data()) {
      CHECK(std::fabs(v) <= bound);
      hi = std::max(hi, std::fabs(v));
    }
    CHECK(hi > 0.1 * bound);
  }

  CHECK(a.at(kFuseW).rows() == 3 * d.h);
  CHECK(a.at(kFuseW).cols() == d.d_e);
  CHECK(a.at(kDecW).cols() == d.labels);
  CHECK(a.at(kGenW2).cols() == d.d_img);
  CHECK(a.at(kDiscW2).cols() == 1);
}

TEST_CASE("init_params rejects bad dims") {
  ModelDims d = tiny_dims();
  d.d_e = 0;
  CHECK_THROWS_AS(init_params(d, 1), std::invalid_argument);
}

TEST_CASE("encode_recipe yields unit rows, deterministically") {
  const ModelDims d = tiny_dims();
  const ModelParams p = init_params(d, 11);
  Rng rng(3);
  const SectionBatch s = rnd_sections(d, 4, rng);

  const Tensor e1 = encode_recipe(p, s.ti, s.ing, s.ins);
  const Tensor e2 = encode_recipe(p, s.ti, s.ing, s.ins);
  CHECK(e1 == e2);
  REQUIRE(e1.shape() == std::vector<int>{4, d.d_e});
  for (int i = 0; i < 4; ++i) CHECK(row_norm(e1, i) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("encode_image yields unit rows of width d_e") {
  const ModelDims d = tiny_dims();
  const ModelParams p = init_params(d, 11);
  Rng rng(4);
  const Tensor img = rnd({3, d.d_img}, rng);
  const Tensor e = encode_image(p, img);
  REQUIRE(e.shape() == std::vector<int>{3, d.d_e});
  for (int i = 0; i < 3; ++i) CHECK(row_norm(e, i) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("rows are encoded independently of their batch") {
  const ModelDims d = tiny_dims();
  const ModelParams p = init_params(d, 5);
  Rng rng(9);
  const SectionBatch s = rnd_sections(d, 3, rng);
  const Tensor full = encode_recipe(p, s.ti, s.ing, s.ins);
  for (int i = 0; i < 3; ++i) {
    const Tensor solo = encode_recipe(p, row(s.ti, i), row(s.ing, i), row(s.ins, i));
    CHECK(max_abs_diff(solo, row(full, i)) == 0.0);
  }

  const Tensor img = rnd({3, d.d_img}, rng);
  const Tensor ifull = encode_image(p, img);
  for (int i = 0; i < 3; ++i)
    CHECK(max_abs_diff(encode_image(p, row(img, i)), row(ifull, i)) == 0.0);
}

TEST_CASE("fusion is linear over sections") {
  // With the fused projection linear in the concatenated hidden sections,
  // swapping one section changes the pre-normalization output by a delta
  // that does not depend on the other sections.
  const ModelDims d = tiny_dims();
  const ModelParams p = init_params(d, 21);
  Rng rng(13);
  const Tensor ing1 = rnd({2, d.d_f}, rng);
  const Tensor ing2 = rnd({2, d.d_f}, rng);
  const SectionBatch a = rnd_sections(d, 2, rng);
  const SectionBatch b = rnd_sections(d, 2, rng);

  auto prenorm = [&](const Tensor& ti, const Tensor& ing, const Tensor& ins) {
    Graph g;
    ModelGraph m = bind(g, p, false);
    return g.value(encode_recipe_prenorm(m, g.leaf(ti, false), g.leaf(ing, false),
                                         g.leaf(ins, false)));
  };

  const Tensor da_1 = prenorm(a.ti, ing1, a.ins);
  const Tensor da_2 = prenorm(a.ti, ing2, a.ins);
  const Tensor db_1 = prenorm(b.ti, ing1, b.ins);
  const Tensor db_2 = prenorm(b.ti, ing2, b.ins);
  for (int64_t i = 0; i < da_1.numel(); ++i) {
    const int k = static_cast<int>(i);
    CHECK(std::fabs((da_1.at(k) - da_2.at(k)) - (db_1.at(k) - db_2.at(k))) < 1e-12);
  }
}

TEST_CASE("discriminate and decode sit in (0,1); zero weights give 0.5") {
  const ModelDims d = tiny_dims();
  const ModelParams p = init_params(d, 2);
  Rng rng(6);
  const Tensor emb = rnd({5, d.d_e}, rng);

  const Tensor dout = discriminate(p, emb);
  REQUIRE(dout.shape() == std::vector<int>{5, 1});
  for (double v : dout.data()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }

  const Tensor labels = decode_ingredients(p, emb);
  REQUIRE(labels.shape() == std::vector<int>{5, d.labels});
  for (double v : labels.data()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }

  const ModelParams z = zero_params(d);
  const Tensor zdisc = discriminate(z, emb);
  const Tensor zdec = decode_ingredients(z, emb);
  for (double v : zdisc.data()) CHECK(v == 0.5);
  for (double v : zdec.data()) CHECK(v == 0.5);
}

TEST_CASE("generate_image_feature has image width and tracks its input") {
  const ModelDims d = tiny_dims();
  const ModelParams p = init_params(d, 2);
  Rng rng(8);
  const Tensor emb1 = rnd({3, d.d_e}, rng);
  const Tensor emb2 = rnd({3, d.d_e}, rng);
  const Tensor g1 = generate_image_feature(p, emb1);
  REQUIRE(g1.shape() == std::vector<int>{3, d.d_img});
  CHECK(g1 == generate_image_feature(p, emb1));
  CHECK(max_abs_diff(g1, generate_image_feature(p, emb2)) > 0.0);
}

TEST_CASE("loss gradients reach the encoder weights and skip unused heads") {
  const ModelDims d = tiny_dims();
  const ModelParams p = init_params(d, 17);
  Rng rng(19);
  const SectionBatch s = rnd_sections(d, 2, rng);

  Graph g;
  ModelGraph m = bind(g, p, true);
  Var emb = encode_recipe(m, g.leaf(s.ti, false), g.leaf(s.ing, false), g.leaf(s.ins, false));
  Var loss = g.mean(generate_image_feature(m, emb));
  g.backward(loss);

  auto grad_mag = [&](WeightIx ix) {
    double mx = 0.0;
    for (double v : g.grad(m.w[ix]).data()) mx = std::max(mx, std::fabs(v));
    return mx;
  };
  CHECK(grad_mag(kTiW) > 0.0);
  CHECK(grad_mag(kIngW) > 0.0);
  CHECK(grad_mag(kInsW) > 0.0);
  CHECK(grad_mag(kFuseW) > 0.0);
  CHECK(grad_mag(kGenW1) > 0.0);
  CHECK(grad_mag(kDiscW1) == 0.0);
  CHECK(grad_mag(kDecW) == 0.0);
  CHECK(grad_mag(kImgW1) == 0.0);
}

TEST_CASE("full model composition passes a numeric gradient check") {
  const ModelDims d = tiny_dims();
  const ModelParams p = init_params(d, 23);
  Rng rng(29);
  const SectionBatch s = rnd_sections(d, 2, rng);

  SUBCASE("w.r.t. the section inputs") {
    GradCheckProblem prob;
    prob.inputs = {s.ti, s.ing, s.ins};
    prob.build = [&](Graph& g, const std::vector<Var>& in) {
      ModelGraph m = bind(g, p, false);
      return g.mean(discriminate(m, encode_recipe(m, in[0], in[1], in[2])));
    };
    CHECK(grad_check(prob).max_rel_error < 1e-4);
  }

  SUBCASE("w.r.t. the fusion weights") {
    GradCheckProblem prob;
    prob.inputs = {p.at(kFuseW)};
    prob.build = [&](Graph& g, const std::vector<Var>& in) {
      std::vector<Var> w(kNumWeights);
      for (int i = 0; i < kNumWeights; ++i)
        w[i] = i == kFuseW ? in[0] : g.constant(p.weights[i]);
      ModelGraph m = bind_vars(g, d, w);
      Var emb = encode_recipe(m, g.constant(s.ti), g.constant(s.ing), g.constant(s.ins));
      return g.mean(generate_image_feature(m, emb));
    };
    CHECK(grad_check(prob).max_rel_error < 1e-4);
  }
}

TEST_CASE("graph and evaluation paths agree") {
  const ModelDims d = tiny_dims();
  const ModelParams p = init_params(d, 31);
  Rng rng(37);
  const SectionBatch s = rnd_sections(d, 3, rng);

  Graph g;
  ModelGraph m = bind(g, p, true);
  Var emb = encode_recipe(m, g.leaf(s.ti, false), g.leaf(s.ing, false), g.leaf(s.ins, false));
  CHECK(g.value(emb) == encode_recipe(p, s.ti, s.ing, s.ins));
  CHECK(g.value(discriminate(m, emb)) == discriminate(p, g.value(emb)));
  CHECK(g.value(decode_ingredients(m, emb)) == decode_ingredients(p, g.value(emb)));
  CHECK(g.value(generate_image_feature(m, emb)) == generate_image_feature(p, g.value(emb)));
}

TEST_CASE("checkpoints round-trip exactly") {
  const ModelDims d = tiny_dims();
  ModelParams p = init_params(d, 41);
  p.step = 123;
  const std::string path = "test_model_ckpt.json";
  save_params(p, path);
  const ModelParams q = load_params(path);
  CHECK(q == p);
  std::remove(path.c_str());
}

TEST_CASE("load_params validates file, fields, and shapes") {
  CHECK_THROWS_WITH_AS(load_params("no_such_dir/ckpt.json"), doctest::Contains("cannot open"),
                       std::runtime_error);

  const ModelDims d = tiny_dims();
  const ModelParams p = init_params(d, 43);
  const std::string path = "test_model_bad_ckpt.json";
  save_params(p, path);

  // drop one weight entry
  {
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string key = "\"dec.w\"";
    const size_t pos = text.find(key);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, key.size(), "\"dec.w_gone\"");
    std::ofstream out(path);
    out << text;
  }
  CHECK_THROWS_WITH_AS(load_params(path), doctest::Contains("dec.w"), std::runtime_error);

  // wrong shape
  {
    ModelParams bad = p;
    bad.weights[kDecB] = Tensor::zeros({d.labels + 1});
    save_params(bad, path);
  }
  CHECK_THROWS_WITH_AS(load_params(path), doctest::Contains("dec.b"), std::runtime_error);
  std::remove(path.c_str());
}
