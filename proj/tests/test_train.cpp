#include "rmix/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "rmix/corpus.hpp"
#include "rmix/model.hpp"

using namespace rmix;

namespace {

CorpusConfig tiny_config() {
  CorpusConfig c;
  c.seed = 42;
  c.n_source = 30;
  c.n_target = 20;
  c.n_test = 10;
  c.v_common = 12;
  c.v_source_unique = 5;
  c.v_target_unique = 4;
  c.d_f = 8;
  c.d_img = 5;
  c.k_min = 2;
  c.k_max = 5;
  c.unify_clusters = 10;
  c.unify_iters = 20;
  return c;
}

const Corpus& tiny_corpus() {
  static const Corpus corpus = generate_corpus(tiny_config());
  return corpus;
}

TrainConfig tiny_train() {
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 8;
  c.hidden = 10;
  c.embed = 6;
  c.seed = 7;
  return c;
}

std::string what_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("token round-trips") {
  for (MixupVariant v : {MixupVariant::rm_s, MixupVariant::rm_t, MixupVariant::rm_st})
    CHECK(variant_from_string(to_string(v)) == v);
  CHECK_THROWS_AS(variant_from_string("rm_x"), std::invalid_argument);
  for (DistanceMode m : {DistanceMode::batch_mean, DistanceMode::per_sample})
    CHECK(distance_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(distance_from_string("pairwise"), std::invalid_argument);
}

TEST_CASE("train config validation") {
  CHECK_NOTHROW(TrainConfig{}.validate());
  TrainConfig c;
  c.epochs = 0;
  CHECK(what_of([&] { c.validate(); }).find("epochs") != std::string::npos);
  c = TrainConfig{};
  c.batch_size = 1;
  CHECK(what_of([&] { c.validate(); }).find("batch_size") != std::string::npos);
  c = TrainConfig{};
  c.lr = 0.0;
  CHECK(what_of([&] { c.validate(); }).find("lr") != std::string::npos);
  c = TrainConfig{};
  c.reversal = -1.0;
  CHECK(what_of([&] { c.validate(); }).find("reversal") != std::string::npos);
  c = TrainConfig{};
  c.strategy = "rm9";
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.weights.lambda1 = -0.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("train config file keeps defaults for absent fields") {
  {
    std::ofstream out("train_cfg.json");
    out << R"({"epochs": 3, "lambda2": 0.5, "variant": "rm_st", "seed": 99})";
  }
  const TrainConfig c = load_train_config("train_cfg.json");
  CHECK(c.epochs == 3);
  CHECK(c.weights.lambda2 == 0.5);
  CHECK(c.variant == "rm_st");
  CHECK(c.seed == 99);
  CHECK(c.batch_size == 32);
  CHECK(c.lr == 1e-4);
  CHECK(c.weights.lambda1 == 0.1);
  CHECK(c.strategy == "rm4");
  CHECK(c.oracle == false);
  std::remove("train_cfg.json");

  {
    std::ofstream out("train_cfg.json");
    out << R"({"variant": "bogus"})";
  }
  CHECK_THROWS_AS(load_train_config("train_cfg.json"), std::invalid_argument);
  std::remove("train_cfg.json");

  {
    std::ofstream out("train_cfg.json");
    out << "{not json";
  }
  CHECK_THROWS_AS(load_train_config("train_cfg.json"), std::runtime_error);
  std::remove("train_cfg.json");
  CHECK_THROWS_AS(load_train_config("no_such_config.json"), std::runtime_error);
}

TEST_CASE("training is deterministic") {
  const TrainConfig cfg = tiny_train();
  const TrainResult a = train(tiny_corpus(), cfg);
  const TrainResult b = train(tiny_corpus(), cfg);
  CHECK(a.params == b.params);
  REQUIRE(a.log.size() == b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].total == b.log[i].total);
    CHECK(a.log[i].tri == b.log[i].tri);
    CHECK(a.log[i].rm == b.log[i].rm);
  }

  TrainConfig other = cfg;
  other.seed = 8;
  const TrainResult c = train(tiny_corpus(), other);
  CHECK(c.params.weights[kTiW].data() != a.params.weights[kTiW].data());
}

TEST_CASE("zero-weight run never touches the ablated paths") {
  TrainConfig cfg = tiny_train();
  cfg.weights.lambda1 = 0.0;
  cfg.weights.lambda2 = 0.0;
  cfg.weights.lambda3 = 0.0;
  const TrainResult r = train(tiny_corpus(), cfg);
  CHECK(r.counters.mixup == 0);
  CHECK(r.counters.adversarial == 0);
  CHECK(r.counters.semantic == 0);
  CHECK(r.counters.generation == 0);
  const int64_t steps = r.params.step;
  CHECK(steps > 0);
  CHECK(r.counters.triplet == steps);
  for (const EpochStats& e : r.log) {
    CHECK(e.rm == 0.0);
    CHECK(e.adv == 0.0);
    CHECK(e.sem == 0.0);
    CHECK(e.gen == 0.0);
    CHECK(e.total == e.tri);
  }
}

TEST_CASE("full objective exercises every path each step") {
  const TrainConfig cfg = tiny_train();
  const TrainResult r = train(tiny_corpus(), cfg);
  const int64_t steps = r.params.step;
  CHECK(steps == 2 * 4);  // 30 pairs in batches of 8: 8,8,8,6 per epoch
  CHECK(r.counters.triplet == steps);
  CHECK(r.counters.mixup == steps);
  CHECK(r.counters.adversarial == steps);
  CHECK(r.counters.semantic == steps);
  CHECK(r.counters.generation == steps);
  REQUIRE(r.log.size() == 2);
  for (const EpochStats& e : r.log) {
    CHECK(e.steps == 4);
    CHECK(std::isfinite(e.total));
    CHECK(e.tri >= 0.0);
    CHECK(e.gen >= 0.0);
    CHECK(e.adv < 0.0);  // log-probability sum
  }
  CHECK(r.log[0].epoch == 1);
  CHECK(r.log[1].epoch == 2);
}

TEST_CASE("every variant, policy, and distance mode trains") {
  for (const char* variant : {"rm_s", "rm_t", "rm_st"}) {
    TrainConfig cfg = tiny_train();
    cfg.epochs = 1;
    cfg.variant = variant;
    CHECK(std::isfinite(train(tiny_corpus(), cfg).log[0].rm));
  }
  TrainConfig cfg = tiny_train();
  cfg.epochs = 1;
  cfg.policy = "hardest";
  cfg.distance = "per_sample";
  cfg.strategy = "rm6";
  const TrainResult r = train(tiny_corpus(), cfg);
  CHECK(std::isfinite(r.log[0].total));
  CHECK(r.log[0].rm >= -1e-12);
}

TEST_CASE("oracle mode trains on the target test pairs") {
  TrainConfig cfg = tiny_train();
  cfg.oracle = true;
  cfg.weights.lambda1 = 0.0;
  cfg.weights.lambda2 = 0.0;
  const TrainResult r = train(tiny_corpus(), cfg);
  // 10 test pairs in batches of 8: the 2-row remainder still trains
  CHECK(r.params.step == 2 * 2);
  CHECK(r.log[0].steps == 2);
}

TEST_CASE("exploding run aborts with step and component values") {
  TrainConfig cfg = tiny_train();
  cfg.lr = 1e200;
  cfg.epochs = 5;
  const std::string msg = what_of([&] { train(tiny_corpus(), cfg); });
  CHECK(msg.find("non-finite") != std::string::npos);
  CHECK(msg.find("step") != std::string::npos);
  CHECK(msg.find("tri=") != std::string::npos);
  CHECK(msg.find("gen=") != std::string::npos);
}

TEST_CASE("train rejects impossible corpora") {
  TrainConfig cfg = tiny_train();
  cfg.batch_size = 25;  // target_train has only 20 recipes
  CHECK(what_of([&] { train(tiny_corpus(), cfg); }).find("target_train") != std::string::npos);
  cfg = tiny_train();
  cfg.batch_size = 25;
  cfg.weights.lambda1 = 0.0;
  cfg.weights.lambda2 = 0.0;
  CHECK_NOTHROW(train(tiny_corpus(), cfg));  // no adaptation loss, no target batch
}

TEST_CASE("train log csv layout") {
  TrainConfig cfg = tiny_train();
  const TrainResult r = train(tiny_corpus(), cfg);
  std::ostringstream out;
  write_train_log(r.log, out);
  const std::string csv = out.str();
  CHECK(csv.rfind("epoch,steps,total,tri,rm,adv,sem,gen\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2);
  CHECK(csv.find("\n1,4,") != std::string::npos);
  CHECK(csv.find("\n2,4,") != std::string::npos);
}

TEST_CASE("experiment suite layout and invariants") {
  TrainConfig cfg = tiny_train();
  cfg.epochs = 1;
  const std::vector<SuiteRow> rows = run_experiment_suite(tiny_corpus(), cfg, 6, 2);
  REQUIRE(rows.size() == 14);
  CHECK(rows.front().name == "source_only");
  CHECK(rows.back().name == "oracle");
  CHECK(rows[1].name == "rm_s_1");
  CHECK(rows[6].name == "rm_s_6");
  CHECK(rows[7].name == "rm_st_1");
  CHECK(rows[12].name == "rm_st_6");
  for (const SuiteRow& r : rows) {
    CHECK(r.report.medr >= 1.0);
    CHECK(r.report.r10 <= r.report.r50);
    CHECK(r.report.q == 6);
    CHECK(r.report.t == 2);
  }

  std::ostringstream out;
  write_suite_csv(rows, out);
  const std::string csv = out.str();
  CHECK(csv.rfind("name,medr,r1,r5,r10,r50\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 14);
  CHECK(csv.find("\noracle,") != std::string::npos);
}

TEST_CASE("loss gradcheck battery stays within tolerance") {
  const std::vector<LossCheckRow> rows = loss_gradcheck_battery(1234, 10);
  REQUIRE(rows.size() == 7);
  const std::vector<std::string> expected = {"triplet", "adversarial", "semantic",
                                             "generation", "rm_s", "rm_t", "rm_st"};
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].loss == expected[i]);
    CHECK(rows[i].points == 10);
    CHECK(rows[i].max_rel_error < 1e-4);
  }
  CHECK_THROWS_AS(loss_gradcheck_battery(1, 0), std::invalid_argument);

  // deterministic across calls
  const std::vector<LossCheckRow> again = loss_gradcheck_battery(1234, 10);
  for (size_t i = 0; i < rows.size(); ++i)
    CHECK(rows[i].max_rel_error == again[i].max_rel_error);
}
