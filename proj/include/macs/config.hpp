#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "macs/classifier.hpp"
#include "macs/dqn.hpp"
#include "macs/env.hpp"
#include "macs/world_model.hpp"

namespace macs {

struct HarnessConfig {
  int corpus_episodes = 1000;
  int eval_episodes_per_composition = 50;
  int classifier_corpus_episodes = 1000;
};

// Everything a full pipeline run reads, grouped by stage. The desk profile
// (the default) is sized for a single workstation core; configs/paper.json
// restores the full-scale attacker budget.
struct RunConfig {
  EnvConfig env;
  WorldModelConfig world_model;
  ClassifierConfig classifier;
  DqnConfig dqn;
  HarnessConfig harness;
};

nlohmann::ordered_json run_config_to_json(const RunConfig& c);

// Applies a (possibly partial) JSON tree over the defaults. Unknown keys
// anywhere in the tree are collected as errors, as are validation failures
// from the per-stage configs. Throws std::invalid_argument listing every
// problem at once.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

// FNV-1a over the canonical serialization; stable across runs and platforms.
std::uint64_t config_hash(const RunConfig& c);

// One manifest per CLI invocation, written next to the outputs.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

void write_manifest(const std::string& path, const RunManifest& m);

}  // namespace macs
