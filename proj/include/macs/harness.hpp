#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "macs/classifier.hpp"
#include "macs/dqn.hpp"
#include "macs/env.hpp"

namespace macs {

enum class AttackSetting { NoAttacker = 0, Heuristic = 1, Rl = 2, GuessedRl = 3 };

const char* setting_name(AttackSetting s);
AttackSetting setting_from_name(const std::string& name);

// Benign composition (stubborn, suggestible, neutral), always summing to 3.
using Composition = std::array<int, 3>;

// The 10 evaluated mixes, in report order.
std::vector<Composition> composition_grid();
std::vector<Personality> composition_personalities(const Composition& c);
std::string composition_label(const Composition& c);

struct EpisodeOutcome {
  bool consensus = false;
  int rounds_used = 0;  // consensus round, or max_rounds on failure
};

struct SettingMetrics {
  double consensus_rate = 0.0;
  double avg_rounds = 0.0;  // failures charged max_rounds
  double std_rounds = 0.0;  // population standard deviation
  std::size_t n = 0;
};

SettingMetrics compute_metrics(const std::vector<EpisodeOutcome>& episodes,
                               int max_rounds);

// Counts episodes by rounds_used; slot 0 holds consensus-at-placement.
std::array<std::size_t, 11> round_histogram(const std::vector<EpisodeOutcome>& episodes);

// Trained artifacts the attacker settings need. NoAttacker and Heuristic run
// with everything null.
struct HarnessContext {
  const QNetWeights* q = nullptr;
  const DqnConfig* dqn_cfg = nullptr;
  const ClassifierWeights* clf = nullptr;
  const ClassifierConfig* clf_cfg = nullptr;
};

// Scored episodes for one (setting, composition) cell. Environment seeds
// depend only on (seed, composition index, episode index) so placements pair
// up across settings. GuessedRl prepends one unscored profiling episode with
// a neutral-acting attacker and classifies each benign agent from it.
std::vector<EpisodeOutcome> run_setting(AttackSetting setting, const Composition& comp,
                                        int comp_index, int episodes, std::uint64_t seed,
                                        const HarnessContext& ctx);

struct CompositionRow {
  Composition comp{};
  SettingMetrics metrics;
  std::vector<EpisodeOutcome> episodes;
};

struct SettingReport {
  AttackSetting setting = AttackSetting::NoAttacker;
  std::vector<CompositionRow> rows;
  SettingMetrics overall;  // pooled over every episode of every composition
};

struct EvaluationReport {
  std::vector<SettingReport> settings;
  int episodes_per_composition = 0;
  std::uint64_t seed = 0;
};

EvaluationReport evaluate_grid(const std::vector<AttackSetting>& settings,
                               int episodes_per_composition, std::uint64_t seed,
                               const HarnessContext& ctx);

void write_evaluation_csv(const std::string& path, const EvaluationReport& report);
std::string format_evaluation_table(const EvaluationReport& report);

// Scripted-corpus collection for world-model and classifier training: cycles
// through the composition grid with a uniformly random attacker.
std::vector<Trajectory> collect_corpus(int n_episodes, std::uint64_t seed);

}  // namespace macs
