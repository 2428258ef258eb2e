#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rmix/corpus.hpp"
#include "rmix/eval.hpp"
#include "rmix/model.hpp"
#include "rmix/train.hpp"

using namespace rmix;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

// Writes to the file when a path is given, otherwise to stdout.
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
  if (path.empty()) {
    write(std::cout);
  } else {
    std::ofstream out = open_out(path);
    write(out);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"recipe-mixup domain adaptation toolkit"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "generate a synthetic bilingual corpus");
  std::string gen_config, gen_out;
  gen->add_option("--config", gen_config, "corpus config JSON (defaults when omitted)");
  gen->add_option("--out", gen_out, "corpus output path")->required();

  auto* train_cmd = app.add_subcommand("train", "train an encoder on a corpus");
  std::string tr_corpus, tr_config, tr_out, tr_log;
  train_cmd->add_option("--corpus", tr_corpus, "corpus file")->required();
  train_cmd->add_option("--config", tr_config, "train config JSON (defaults when omitted)");
  train_cmd->add_option("--out", tr_out, "checkpoint output path");
  train_cmd->add_option("--log", tr_log, "training log CSV path");

  auto* eval_cmd = app.add_subcommand("eval", "image-to-recipe retrieval metrics");
  std::string ev_ckpt, ev_corpus, ev_out;
  int ev_q = 500, ev_t = 10;
  uint64_t ev_seed = 7;
  eval_cmd->add_option("--ckpt", ev_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--corpus", ev_corpus, "corpus file")->required();
  eval_cmd->add_option("--q", ev_q, "queries per repeat");
  eval_cmd->add_option("--t", ev_t, "repeats");
  eval_cmd->add_option("--seed", ev_seed, "sampling seed");
  eval_cmd->add_option("--out", ev_out, "report CSV path (stdout when omitted)");

  auto* diag = app.add_subcommand("diag", "domain-gap distances and 2-D projection");
  std::string dg_ckpt, dg_corpus, dg_points;
  int dg_n = 100;
  uint64_t dg_seed = 7;
  diag->add_option("--ckpt", dg_ckpt, "checkpoint file")->required();
  diag->add_option("--corpus", dg_corpus, "corpus file")->required();
  diag->add_option("--n", dg_n, "samples per group");
  diag->add_option("--seed", dg_seed, "sampling seed");
  diag->add_option("--points", dg_points, "projection CSV path (skipped when omitted)");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference sweep over every loss");
  uint64_t gc_seed = 1234;
  int gc_points = 10;
  double gc_tol = 1e-4;
  gradcheck->add_option("--seed", gc_seed, "draw seed");
  gradcheck->add_option("--points", gc_points, "instances per loss");
  gradcheck->add_option("--tol", gc_tol, "max relative error allowed");

  auto* suite = app.add_subcommand("suite", "train and evaluate every variant");
  std::string su_corpus, su_config, su_out;
  int su_q = 500, su_t = 10;
  suite->add_option("--corpus", su_corpus, "corpus file")->required();
  suite->add_option("--config", su_config, "base train config JSON (defaults when omitted)");
  suite->add_option("--q", su_q, "queries per repeat");
  suite->add_option("--t", su_t, "repeats");
  suite->add_option("--out", su_out, "table CSV path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    const CorpusConfig cfg = gen_config.empty() ? CorpusConfig{} : load_corpus_config(gen_config);
    save_corpus(generate_corpus(cfg), gen_out);
    return 0;
  }

  if (train_cmd->parsed()) {
    TrainConfig cfg = tr_config.empty() ? TrainConfig{} : load_train_config(tr_config);
    if (!tr_out.empty()) cfg.ckpt_path = tr_out;
    if (!tr_log.empty()) cfg.log_path = tr_log;
    if (cfg.ckpt_path.empty())
      throw std::runtime_error("train: no checkpoint path (--out or config ckpt_path)");
    const Corpus corpus = load_corpus(tr_corpus);
    const TrainResult result = train(corpus, cfg);
    save_params(result.params, cfg.ckpt_path);
    if (!cfg.log_path.empty()) {
      std::ofstream out = open_out(cfg.log_path);
      write_train_log(result.log, out);
    }
    return 0;
  }

  if (eval_cmd->parsed()) {
    const ModelParams params = load_params(ev_ckpt);
    const Corpus corpus = load_corpus(ev_corpus);
    const EvalReport report = evaluate(params, corpus, ev_q, ev_t, ev_seed);
    emit(ev_out, [&](std::ostream& out) { write_eval_csv(report, out); });
    return 0;
  }

  if (diag->parsed()) {
    const ModelParams params = load_params(dg_ckpt);
    const Corpus corpus = load_corpus(dg_corpus);
    const DiagnosticsReport report = diagnose(params, corpus, dg_n, dg_seed);
    write_diag_summary_csv(report, std::cout);
    if (!dg_points.empty()) {
      std::ofstream out = open_out(dg_points);
      write_diag_points_csv(report, out);
    }
    return 0;
  }

  if (gradcheck->parsed()) {
    const std::vector<LossCheckRow> rows = loss_gradcheck_battery(gc_seed, gc_points);
    std::cout << "loss,points,max_rel_error,pass\n";
    bool ok = true;
    for (const LossCheckRow& r : rows) {
      const bool pass = r.max_rel_error < gc_tol;
      ok = ok && pass;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3e", r.max_rel_error);
      std::cout << r.loss << ',' << r.points << ',' << buf << ',' << (pass ? "yes" : "no")
                << '\n';
    }
    return ok ? 0 : 1;
  }

  if (suite->parsed()) {
    const TrainConfig base = su_config.empty() ? TrainConfig{} : load_train_config(su_config);
    const Corpus corpus = load_corpus(su_corpus);
    const std::vector<SuiteRow> rows = run_experiment_suite(corpus, base, su_q, su_t);
    emit(su_out, [&](std::ostream& out) { write_suite_csv(rows, out); });
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "rmix: " << e.what() << '\n';
    return 1;
  }
}
