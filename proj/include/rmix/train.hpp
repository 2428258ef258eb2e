#ifndef RMIX_TRAIN_HPP_
#define RMIX_TRAIN_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rmix/corpus.hpp"
#include "rmix/eval.hpp"
#include "rmix/mixup.hpp"
#include "rmix/model.hpp"
#include "rmix/objective.hpp"

namespace rmix {

enum class MixupVariant { rm_s, rm_t, rm_st };

std::string to_string(MixupVariant v);
MixupVariant variant_from_string(const std::string& token);
std::string to_string(DistanceMode m);
DistanceMode distance_from_string(const std::string& token);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  double lr = 1e-4;
  LossWeights weights;
  std::string strategy = "rm4";         // which sections the mixup exchanges
  std::string variant = "rm_s";         // rm_s | rm_t | rm_st
  std::string policy = "random";        // triplet negative sampling
  std::string distance = "batch_mean";  // batch_mean | per_sample
  uint64_t seed = 7;
  bool oracle = false;   // train on the target test pairs (upper bound)
  double reversal = 1.0; // gradient reversal coefficient
  int hidden = 128;
  int embed = 32;
  std::string corpus_path;
  std::string ckpt_path;
  std::string log_path;

  void validate() const;  // throws naming the offending field
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Standalone JSON config file; absent fields keep their defaults.
TrainConfig load_train_config(const std::string& path);

struct EpochStats {
  int epoch = 0;  // 1-based
  int steps = 0;
  double total = 0.0, tri = 0.0, rm = 0.0, adv = 0.0, sem = 0.0, gen = 0.0;  // step means
};

// Times each loss path was built, for ablation wiring checks.
struct PathCounters {
  int64_t triplet = 0, mixup = 0, adversarial = 0, semantic = 0, generation = 0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> log;
  PathCounters counters;
};

TrainResult train(const Corpus& corpus, const TrainConfig& cfg);

void write_train_log(const std::vector<EpochStats>& log, std::ostream& out);

struct SuiteRow {
  std::string name;
  EvalReport report;
};

// One row per variant: source_only, rm_s x6 strategies, rm_st x6, oracle.
// Every variant trains from the base seed; oracle and source_only run with
// the mixup and adversarial weights zeroed.
std::vector<SuiteRow> run_experiment_suite(const Corpus& corpus, const TrainConfig& base, int q,
                                           int t);
void write_suite_csv(const std::vector<SuiteRow>& rows, std::ostream& out);

struct LossCheckRow {
  std::string loss;
  double max_rel_error = 0.0;
  int points = 0;
};

// Central finite differences against the tape for every loss, at `points`
// seeded random instances each; draws landing within 1e-3 of a hinge or
// probability clamp are redrawn.
std::vector<LossCheckRow> loss_gradcheck_battery(uint64_t seed, int points);

}  // namespace rmix

#endif  // RMIX_TRAIN_HPP_
