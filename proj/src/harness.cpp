#include "macs/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "macs/parallel.hpp"
#include "macs/policies.hpp"

namespace macs {

const char* setting_name(AttackSetting s) {
  switch (s) {
    case AttackSetting::NoAttacker: return "no_attacker";
    case AttackSetting::Heuristic: return "heuristic";
    case AttackSetting::Rl: return "rl";
    case AttackSetting::GuessedRl: return "guessed_rl";
  }
  throw std::invalid_argument("setting_name: unknown setting");
}

AttackSetting setting_from_name(const std::string& name) {
  for (AttackSetting s : {AttackSetting::NoAttacker, AttackSetting::Heuristic,
                          AttackSetting::Rl, AttackSetting::GuessedRl})
    if (name == setting_name(s)) return s;
  throw std::invalid_argument("setting_from_name: " + name);
}

std::vector<Composition> composition_grid() {
  return {{3, 0, 0}, {0, 3, 0}, {0, 0, 3}, {2, 1, 0}, {2, 0, 1},
          {1, 2, 0}, {1, 0, 2}, {0, 2, 1}, {0, 1, 2}, {1, 1, 1}};
}

std::vector<Personality> composition_personalities(const Composition& c) {
  if (c[0] + c[1] + c[2] != 3)
    throw std::invalid_argument("composition must have 3 benign agents");
  std::vector<Personality> out;
  for (int i = 0; i < c[0]; ++i) out.push_back(Personality::Stubborn);
  for (int i = 0; i < c[1]; ++i) out.push_back(Personality::Suggestible);
  for (int i = 0; i < c[2]; ++i) out.push_back(Personality::Neutral);
  return out;
}

std::string composition_label(const Composition& c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%dS/%dG/%dN", c[0], c[1], c[2]);
  return buf;
}

SettingMetrics compute_metrics(const std::vector<EpisodeOutcome>& episodes,
                               int max_rounds) {
  if (episodes.empty()) throw std::invalid_argument("compute_metrics: no episodes");
  SettingMetrics m;
  m.n = episodes.size();
  double sum = 0.0;
  std::size_t consensus = 0;
  for (const EpisodeOutcome& e : episodes) {
    if (e.consensus) ++consensus;
    if (!e.consensus && e.rounds_used != max_rounds)
      throw std::invalid_argument("compute_metrics: failed episode not at horizon");
    sum += e.rounds_used;
  }
  m.consensus_rate = static_cast<double>(consensus) / static_cast<double>(m.n);
  m.avg_rounds = sum / static_cast<double>(m.n);
  double var = 0.0;
  for (const EpisodeOutcome& e : episodes) {
    const double d = e.rounds_used - m.avg_rounds;
    var += d * d;
  }
  m.std_rounds = std::sqrt(var / static_cast<double>(m.n));
  return m;
}

std::array<std::size_t, 11> round_histogram(const std::vector<EpisodeOutcome>& episodes) {
  std::array<std::size_t, 11> h{};
  for (const EpisodeOutcome& e : episodes) {
    if (e.rounds_used < 0 || e.rounds_used > 10)
      throw std::invalid_argument("round_histogram: rounds_used out of range");
    h[static_cast<std::size_t>(e.rounds_used)] += 1;
  }
  return h;
}

namespace {

EpisodeOutcome outcome_of(const Trajectory& t) {
  EpisodeOutcome e;
  e.consensus = t.consensus;
  e.rounds_used = t.rounds_used();
  return e;
}

std::vector<std::unique_ptr<ScriptedBenignBackend>> make_benign(
    const std::vector<Personality>& ps, std::vector<AgentBackend*>& raw) {
  std::vector<std::unique_ptr<ScriptedBenignBackend>> owned;
  for (Personality p : ps) {
    owned.push_back(
        std::make_unique<ScriptedBenignBackend>(p, default_personality_params(p)));
    raw.push_back(owned.back().get());
  }
  return owned;
}

std::uint64_t episode_seed(std::uint64_t seed, int comp_index, int episode) {
  // shared across settings so placements pair up
  return mix_seed({seed, 0xe15ULL, static_cast<std::uint64_t>(comp_index),
                   static_cast<std::uint64_t>(episode)});
}

}  // namespace

std::vector<EpisodeOutcome> run_setting(AttackSetting setting, const Composition& comp,
                                        int comp_index, int episodes, std::uint64_t seed,
                                        const HarnessContext& ctx) {
  if (episodes <= 0) throw std::invalid_argument("run_setting: episodes must be positive");
  if ((setting == AttackSetting::Rl || setting == AttackSetting::GuessedRl) &&
      (ctx.q == nullptr || ctx.dqn_cfg == nullptr))
    throw std::invalid_argument("run_setting: RL settings need a trained attacker");
  if (setting == AttackSetting::GuessedRl &&
      (ctx.clf == nullptr || ctx.clf_cfg == nullptr))
    throw std::invalid_argument("run_setting: guessed setting needs a classifier");

  const std::vector<Personality> true_attrs = composition_personalities(comp);

  std::vector<Personality> attrs = true_attrs;
  if (setting == AttackSetting::GuessedRl) {
    // one unscored profiling episode with a cooperative-looking attacker
    EnvConfig cfg;
    cfg.seed = mix_seed({seed, 0x9f0fULL, static_cast<std::uint64_t>(comp_index)});
    std::vector<AgentBackend*> raw;
    auto owned = make_benign(true_attrs, raw);
    NeutralProfilingBackend profiler;
    Trajectory probe = run_episode(cfg, true_attrs, raw, &profiler, -1);
    auto inferred = infer_episode_attributes(*ctx.clf, *ctx.clf_cfg, probe);
    if (inferred.size() == true_attrs.size()) attrs = inferred;
  }

  std::vector<EpisodeOutcome> out(static_cast<std::size_t>(episodes));
  parallel_for(static_cast<std::size_t>(episodes), [&](std::size_t e) {
    EnvConfig cfg;
    cfg.seed = episode_seed(seed, comp_index, static_cast<int>(e));
    if (setting == AttackSetting::NoAttacker) {
      // the attacker slot is replaced by a fourth, neutral benign agent
      cfg.n_benign = 4;
      cfg.n_malicious = 0;
      std::vector<Personality> ps = true_attrs;
      ps.push_back(Personality::Neutral);
      std::vector<AgentBackend*> raw;
      auto owned = make_benign(ps, raw);
      out[e] = outcome_of(run_episode(cfg, ps, raw, nullptr, static_cast<std::int64_t>(e)));
      return;
    }
    std::vector<AgentBackend*> raw;
    auto owned = make_benign(true_attrs, raw);
    if (setting == AttackSetting::Heuristic) {
      HeuristicMaliciousBackend attacker;
      out[e] = outcome_of(
          run_episode(cfg, true_attrs, raw, &attacker, static_cast<std::int64_t>(e)));
    } else {
      RlAttackerBackend attacker(ctx.q, ctx.dqn_cfg, attrs);
      attacker.begin_episode();
      out[e] = outcome_of(
          run_episode(cfg, true_attrs, raw, &attacker, static_cast<std::int64_t>(e)));
    }
  });
  return out;
}

EvaluationReport evaluate_grid(const std::vector<AttackSetting>& settings,
                               int episodes_per_composition, std::uint64_t seed,
                               const HarnessContext& ctx) {
  EvaluationReport report;
  report.episodes_per_composition = episodes_per_composition;
  report.seed = seed;
  const auto grid = composition_grid();
  for (AttackSetting s : settings) {
    SettingReport sr;
    sr.setting = s;
    std::vector<EpisodeOutcome> pooled;
    for (std::size_t c = 0; c < grid.size(); ++c) {
      CompositionRow row;
      row.comp = grid[c];
      row.episodes = run_setting(s, grid[c], static_cast<int>(c),
                                 episodes_per_composition, seed, ctx);
      row.metrics = compute_metrics(row.episodes, EnvConfig{}.max_rounds);
      pooled.insert(pooled.end(), row.episodes.begin(), row.episodes.end());
      sr.rows.push_back(std::move(row));
    }
    sr.overall = compute_metrics(pooled, EnvConfig{}.max_rounds);
    report.settings.push_back(std::move(sr));
  }
  return report;
}

void write_evaluation_csv(const std::string& path, const EvaluationReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write evaluation csv: " + path);
  out << "setting,composition,consensus_rate,avg_rounds,std_rounds,episodes\n";
  char buf[200];
  for (const SettingReport& sr : report.settings) {
    for (const CompositionRow& row : sr.rows) {
      std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6f,%.6f,%zu\n",
                    setting_name(sr.setting), composition_label(row.comp).c_str(),
                    row.metrics.consensus_rate, row.metrics.avg_rounds,
                    row.metrics.std_rounds, row.metrics.n);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%s,overall,%.6f,%.6f,%.6f,%zu\n",
                  setting_name(sr.setting), sr.overall.consensus_rate,
                  sr.overall.avg_rounds, sr.overall.std_rounds, sr.overall.n);
    out << buf;
  }
}

std::string format_evaluation_table(const EvaluationReport& report) {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-12s %-10s %8s %12s %10s\n", "setting", "mix", "CR",
                "avg_rounds", "std");
  os << buf;
  for (const SettingReport& sr : report.settings) {
    for (const CompositionRow& row : sr.rows) {
      std::snprintf(buf, sizeof buf, "%-12s %-10s %8.3f %12.2f %10.2f\n",
                    setting_name(sr.setting), composition_label(row.comp).c_str(),
                    row.metrics.consensus_rate, row.metrics.avg_rounds,
                    row.metrics.std_rounds);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%-12s %-10s %8.3f %12.2f %10.2f\n",
                  setting_name(sr.setting), "overall", sr.overall.consensus_rate,
                  sr.overall.avg_rounds, sr.overall.std_rounds);
    os << buf;
  }
  return os.str();
}

std::vector<Trajectory> collect_corpus(int n_episodes, std::uint64_t seed) {
  if (n_episodes <= 0) throw std::invalid_argument("collect_corpus: need episodes");
  const auto grid = composition_grid();
  std::vector<Trajectory> out(static_cast<std::size_t>(n_episodes));
  parallel_for(static_cast<std::size_t>(n_episodes), [&](std::size_t i) {
    const Composition& comp = grid[i % grid.size()];
    const auto ps = composition_personalities(comp);
    std::vector<AgentBackend*> raw;
    auto owned = make_benign(ps, raw);
    RandomAttackerBackend attacker;
    EnvConfig cfg;
    cfg.seed = mix_seed({seed, 0xc0ULL, static_cast<std::uint64_t>(i)});
    out[i] = run_episode(cfg, ps, raw, &attacker, static_cast<std::int64_t>(i));
  });
  return out;
}

}  // namespace macs
