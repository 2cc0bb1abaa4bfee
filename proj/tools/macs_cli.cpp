#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "macs/classifier.hpp"
#include "macs/config.hpp"
#include "macs/dqn.hpp"
#include "macs/harness.hpp"
#include "macs/traj_io.hpp"
#include "macs/world_model.hpp"

namespace fs = std::filesystem;
using namespace macs;

namespace {

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON config overlay (defaults when omitted)");
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--out", o.out_dir, "output directory");
}

RunConfig load_config(const CommonOpts& o) {
  if (o.config_path.empty()) return RunConfig{};
  return load_run_config(o.config_path);
}

std::string out_path(const CommonOpts& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return (fs::path(o.out_dir) / name).string();
}

void finish(const CommonOpts& o, const RunConfig& cfg, const std::string& command,
            std::vector<std::string> inputs, std::vector<std::string> outputs) {
  RunManifest m;
  m.command = command;
  m.seed = o.seed;
  m.config_hash = config_hash(cfg);
  m.inputs = std::move(inputs);
  m.outputs = std::move(outputs);
  write_manifest(out_path(o, command + ".manifest.json"), m);
}

int cmd_collect(const CommonOpts& o) {
  RunConfig cfg = load_config(o);
  auto corpus = collect_corpus(cfg.harness.corpus_episodes, o.seed);
  const std::string path = out_path(o, "corpus.jsonl");
  write_trajectories(path, corpus);
  std::cout << "wrote " << corpus.size() << " episodes to " << path << "\n";
  finish(o, cfg, "collect", {}, {path});
  return 0;
}

int cmd_train_wm(const CommonOpts& o, const std::string& corpus_path) {
  RunConfig cfg = load_config(o);
  auto corpus = read_trajectories(corpus_path);
  auto dataset = build_wm_dataset(corpus);
  std::cout << "training world model on " << dataset.size() << " transitions\n";
  auto result = wm_train(dataset, cfg.world_model, o.seed);
  const std::string ckpt = out_path(o, "wm.ckpt.json");
  save_wm_checkpoint(ckpt, cfg.world_model, result.best);
  std::cout << "best epoch " << result.best_epoch << ", val loss "
            << result.val_loss[static_cast<std::size_t>(result.best_epoch)] << "\n";
  finish(o, cfg, "train-wm", {corpus_path}, {ckpt});
  return 0;
}

int cmd_eval_wm(const CommonOpts& o, const std::string& ckpt_path,
                const std::string& corpus_path) {
  RunConfig cfg = load_config(o);
  WorldModelWeights w;
  WorldModelConfig wm_cfg = load_wm_checkpoint(ckpt_path, w);
  auto held_out = build_wm_dataset(read_trajectories(corpus_path));
  auto report = wm_evaluate(w, wm_cfg, held_out);
  const std::string csv = out_path(o, "wm_eval.csv");
  write_wm_eval_csv(csv, report);
  std::cout << "overall mae " << report.overall.mae << ", accuracy "
            << report.overall.accuracy << " on " << report.overall.n << " transitions\n";
  finish(o, cfg, "eval-wm", {ckpt_path, corpus_path}, {csv});
  return 0;
}

int cmd_train_clf(const CommonOpts& o, const std::string& corpus_path) {
  RunConfig cfg = load_config(o);
  auto dataset = build_clf_dataset(read_trajectories(corpus_path), cfg.classifier);
  std::cout << "training classifier on " << dataset.size() << " agent episodes\n";
  auto result = clf_train(dataset, cfg.classifier, o.seed);
  const std::string ckpt = out_path(o, "clf.ckpt.json");
  save_clf_checkpoint(ckpt, cfg.classifier, result.best);
  std::cout << "best epoch " << result.best_epoch << ", val accuracy "
            << result.val_accuracy[static_cast<std::size_t>(result.best_epoch)] << "\n";
  finish(o, cfg, "train-clf", {corpus_path}, {ckpt});
  return 0;
}

int cmd_eval_clf(const CommonOpts& o, const std::string& ckpt_path,
                 const std::string& corpus_path) {
  RunConfig cfg = load_config(o);
  ClassifierWeights w;
  ClassifierConfig clf_cfg = load_clf_checkpoint(ckpt_path, w);
  auto samples = build_clf_dataset(read_trajectories(corpus_path), clf_cfg);
  auto report = clf_evaluate(w, clf_cfg, samples);
  const std::string csv = out_path(o, "clf_eval.csv");
  write_clf_eval_csv(csv, report);
  std::cout << "accuracy " << report.accuracy << " on " << report.n << " samples\n";
  finish(o, cfg, "eval-clf", {ckpt_path, corpus_path}, {csv});
  return 0;
}

int cmd_train_dqn(const CommonOpts& o, const std::string& wm_ckpt) {
  RunConfig cfg = load_config(o);
  WorldModelWeights wm;
  WorldModelConfig wm_cfg = load_wm_checkpoint(wm_ckpt, wm);
  std::cout << "training attacker for " << cfg.dqn.total_steps << " surrogate steps\n";
  auto result = train_attacker(wm, wm_cfg, cfg.env, cfg.dqn, o.seed);
  const std::string ckpt = out_path(o, "dqn.ckpt.json");
  const std::string curve = out_path(o, "dqn_curve.csv");
  save_dqn_checkpoint(ckpt, cfg.dqn, result.best);
  write_dqn_curve_csv(curve, result.curve);
  if (!result.curve.empty())
    std::cout << "final surrogate consensus rate "
              << result.curve.back().surrogate_consensus_rate << ", best at step "
              << result.best_step << "\n";
  finish(o, cfg, "train-dqn", {wm_ckpt}, {ckpt, curve});
  return 0;
}

int cmd_evaluate(const CommonOpts& o, const std::string& dqn_ckpt,
                 const std::string& clf_ckpt) {
  RunConfig cfg = load_config(o);
  HarnessContext ctx;
  QNetWeights q;
  DqnConfig dqn_cfg;
  ClassifierWeights clf;
  ClassifierConfig clf_cfg;
  std::vector<AttackSetting> settings = {AttackSetting::NoAttacker,
                                         AttackSetting::Heuristic};
  if (!dqn_ckpt.empty()) {
    dqn_cfg = load_dqn_checkpoint(dqn_ckpt, q);
    ctx.q = &q;
    ctx.dqn_cfg = &dqn_cfg;
    settings.push_back(AttackSetting::Rl);
  }
  if (!clf_ckpt.empty()) {
    if (dqn_ckpt.empty())
      throw std::invalid_argument("--clf requires --dqn for the guessed setting");
    clf_cfg = load_clf_checkpoint(clf_ckpt, clf);
    ctx.clf = &clf;
    ctx.clf_cfg = &clf_cfg;
    settings.push_back(AttackSetting::GuessedRl);
  }
  auto report =
      evaluate_grid(settings, cfg.harness.eval_episodes_per_composition, o.seed, ctx);
  const std::string csv = out_path(o, "evaluation.csv");
  const std::string table = out_path(o, "evaluation.txt");
  const std::string hist = out_path(o, "round_histogram.csv");
  write_evaluation_csv(csv, report);
  {
    std::ofstream out(table);
    out << format_evaluation_table(report);
  }
  {
    std::ofstream out(hist);
    out << "setting,rounds,count\n";
    for (const SettingReport& sr : report.settings) {
      std::vector<EpisodeOutcome> pooled;
      for (const CompositionRow& row : sr.rows)
        pooled.insert(pooled.end(), row.episodes.begin(), row.episodes.end());
      auto h = round_histogram(pooled);
      for (std::size_t r = 0; r < h.size(); ++r)
        out << setting_name(sr.setting) << "," << r << "," << h[r] << "\n";
    }
  }
  std::cout << format_evaluation_table(report);
  std::vector<std::string> inputs;
  if (!dqn_ckpt.empty()) inputs.push_back(dqn_ckpt);
  if (!clf_ckpt.empty()) inputs.push_back(clf_ckpt);
  finish(o, cfg, "evaluate", inputs, {csv, table, hist});
  return 0;
}

int cmd_report(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot read evaluation csv: " + csv_path);
  std::string line;
  std::getline(in, line);  // header
  std::printf("%-12s %-10s %8s %12s %10s %10s\n", "setting", "mix", "CR", "avg_rounds",
              "std", "episodes");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string setting, mix, cr, avg, sd, n;
    std::getline(is, setting, ',');
    std::getline(is, mix, ',');
    std::getline(is, cr, ',');
    std::getline(is, avg, ',');
    std::getline(is, sd, ',');
    std::getline(is, n, ',');
    std::printf("%-12s %-10s %8.3f %12.2f %10.2f %10s\n", setting.c_str(), mix.c_str(),
                std::stod(cr), std::stod(avg), std::stod(sd), n.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"world-model insider attack pipeline for 1-D multi-agent consensus"};
  app.require_subcommand(1);

  CommonOpts collect_o, wm_o, ewm_o, clf_o, eclf_o, dqn_o, eval_o;
  std::string corpus_path, wm_ckpt, clf_ckpt, dqn_ckpt, eval_csv;

  auto* collect = app.add_subcommand("collect", "collect a scripted-policy corpus");
  add_common(collect, collect_o);

  auto* train_wm = app.add_subcommand("train-wm", "train the surrogate world model");
  add_common(train_wm, wm_o);
  train_wm->add_option("--corpus", corpus_path, "trajectory jsonl")->required();

  auto* eval_wm = app.add_subcommand("eval-wm", "evaluate a world-model checkpoint");
  add_common(eval_wm, ewm_o);
  eval_wm->add_option("--checkpoint", wm_ckpt, "world-model checkpoint")->required();
  eval_wm->add_option("--corpus", corpus_path, "held-out trajectory jsonl")->required();

  auto* train_clf = app.add_subcommand("train-clf", "train the attribute classifier");
  add_common(train_clf, clf_o);
  train_clf->add_option("--corpus", corpus_path, "trajectory jsonl")->required();

  auto* eval_clf = app.add_subcommand("eval-clf", "evaluate a classifier checkpoint");
  add_common(eval_clf, eclf_o);
  eval_clf->add_option("--checkpoint", clf_ckpt, "classifier checkpoint")->required();
  eval_clf->add_option("--corpus", corpus_path, "held-out trajectory jsonl")->required();

  auto* train_dqn = app.add_subcommand("train-dqn", "train the attacker in the surrogate");
  add_common(train_dqn, dqn_o);
  train_dqn->add_option("--wm", wm_ckpt, "world-model checkpoint")->required();

  auto* evaluate = app.add_subcommand("evaluate", "run the composition-grid evaluation");
  add_common(evaluate, eval_o);
  evaluate->add_option("--dqn", dqn_ckpt, "attacker checkpoint (enables rl setting)");
  evaluate->add_option("--clf", clf_ckpt, "classifier checkpoint (enables guessed_rl)");

  auto* report = app.add_subcommand("report", "pretty-print an evaluation csv");
  report->add_option("--eval", eval_csv, "evaluation.csv path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (collect->parsed()) return cmd_collect(collect_o);
    if (train_wm->parsed()) return cmd_train_wm(wm_o, corpus_path);
    if (eval_wm->parsed()) return cmd_eval_wm(ewm_o, wm_ckpt, corpus_path);
    if (train_clf->parsed()) return cmd_train_clf(clf_o, corpus_path);
    if (eval_clf->parsed()) return cmd_eval_clf(eclf_o, clf_ckpt, corpus_path);
    if (train_dqn->parsed()) return cmd_train_dqn(dqn_o, wm_ckpt);
    if (evaluate->parsed()) return cmd_evaluate(eval_o, dqn_ckpt, clf_ckpt);
    if (report->parsed()) return cmd_report(eval_csv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
