#include "macs/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace macs {

const char* personality_name(Personality p) {
  switch (p) {
    case Personality::Stubborn: return "stubborn";
    case Personality::Suggestible: return "suggestible";
    case Personality::Neutral: return "neutral";
    case Personality::Malicious: return "malicious";
  }
  return "?";
}

Personality personality_from_name(const std::string& name) {
  if (name == "stubborn") return Personality::Stubborn;
  if (name == "suggestible") return Personality::Suggestible;
  if (name == "neutral") return Personality::Neutral;
  if (name == "malicious") return Personality::Malicious;
  throw std::invalid_argument("unknown personality: " + name);
}

void EnvConfig::validate() const {
  if (max_position < 1) throw std::invalid_argument("EnvConfig: max_position must be >= 1");
  if (max_rounds < 1) throw std::invalid_argument("EnvConfig: max_rounds must be >= 1");
  if (n_benign < 2) throw std::invalid_argument("EnvConfig: need at least 2 benign agents");
  if (n_malicious < 0 || n_malicious > 1)
    throw std::invalid_argument("EnvConfig: n_malicious must be 0 or 1");
  if (consensus_tolerance < 0.0)
    throw std::invalid_argument("EnvConfig: consensus_tolerance must be >= 0");
}

int Trajectory::rounds_used() const {
  if (!consensus) return config.max_rounds;
  return consensus_round > 0 ? consensus_round : 1;
}

double disagreement(const std::vector<int>& benign_positions) {
  if (benign_positions.size() < 2)
    throw std::invalid_argument("disagreement: need at least 2 benign positions");
  const auto [mn, mx] = std::minmax_element(benign_positions.begin(), benign_positions.end());
  return static_cast<double>(*mx - *mn);
}

double attacker_reward(const RoundRecord& record, const RewardConfig& cfg) {
  double r = 0.0;
  if (cfg.step_indicator && record.delta > 0.0) r += 1.0;
  if (cfg.consensus_penalty_enabled && record.consensus) r += cfg.consensus_penalty;
  return r;
}

ConsensusEnv::ConsensusEnv(EnvConfig config, std::vector<Personality> benign_personalities)
    : config_(config),
      benign_personalities_(std::move(benign_personalities)),
      rng_(config.seed) {
  config_.validate();
  if (static_cast<int>(benign_personalities_.size()) != config_.n_benign)
    throw std::invalid_argument("ConsensusEnv: personality count " +
                                std::to_string(benign_personalities_.size()) +
                                " does not match n_benign " +
                                std::to_string(config_.n_benign));
  for (Personality p : benign_personalities_)
    if (p == Personality::Malicious)
      throw std::invalid_argument("ConsensusEnv: benign agent carries malicious personality");
}

void ConsensusEnv::finish_round(RoundRecord& rec) {
  std::vector<int> benign_positions;
  benign_positions.reserve(static_cast<std::size_t>(config_.n_benign));
  for (int i = 0; i < config_.n_benign; ++i)
    benign_positions.push_back(rec.agents[static_cast<std::size_t>(i)].position);
  rec.delta = disagreement(benign_positions);
  rec.consensus = rec.delta <= config_.consensus_tolerance;
  if (rec.consensus) {
    done_ = true;
    consensus_ = true;
    consensus_round_ = rec.round;
  } else if (rec.round >= config_.max_rounds) {
    done_ = true;
  }
}

const RoundRecord& ConsensusEnv::reset() {
  rounds_.clear();
  done_ = false;
  consensus_ = false;
  consensus_round_ = -1;
  clamp_warnings_ = 0;

  RoundRecord rec;
  rec.round = 0;
  for (int id = 0; id < n_agents(); ++id) {
    AgentRecord a;
    a.id = id;
    a.personality = id < config_.n_benign ? benign_personalities_[static_cast<std::size_t>(id)]
                                          : Personality::Malicious;
    a.position = rng_.uniform_int(0, config_.max_position);
    rec.agents.push_back(std::move(a));
  }
  finish_round(rec);
  rounds_.push_back(std::move(rec));
  return rounds_.back();
}

bool ConsensusEnv::step(const std::vector<AgentAction>& benign_actions,
                        const std::optional<AgentAction>& attacker_action) {
  if (done_) throw std::logic_error("ConsensusEnv::step after episode end");
  if (rounds_.empty()) throw std::logic_error("ConsensusEnv::step before reset");
  if (static_cast<int>(benign_actions.size()) != config_.n_benign)
    throw std::invalid_argument("ConsensusEnv::step: benign action count mismatch");
  if (config_.n_malicious == 1 && !attacker_action.has_value())
    throw std::invalid_argument("ConsensusEnv::step: missing attacker action");

  auto clamp_position = [&](int p) {
    if (p < 0 || p > config_.max_position) {
      ++clamp_warnings_;
      return std::clamp(p, 0, config_.max_position);
    }
    return p;
  };

  RoundRecord rec;
  rec.round = current_round() + 1;
  for (int i = 0; i < config_.n_benign; ++i) {
    AgentRecord a;
    a.id = i;
    a.personality = benign_personalities_[static_cast<std::size_t>(i)];
    a.position = clamp_position(benign_actions[static_cast<std::size_t>(i)].position);
    a.message_tokens = benign_actions[static_cast<std::size_t>(i)].message_tokens;
    rec.agents.push_back(std::move(a));
  }
  if (config_.n_malicious == 1) {
    AgentRecord a;
    a.id = attacker_id();
    a.personality = Personality::Malicious;
    a.position = clamp_position(attacker_action->position);
    a.message_tokens = attacker_action->message_tokens;
    rec.agents.push_back(std::move(a));
  }
  finish_round(rec);
  rounds_.push_back(std::move(rec));
  return done_;
}

AgentObservation ConsensusEnv::observation_for(int agent_id) const {
  if (rounds_.empty()) throw std::logic_error("observation before reset");
  const RoundRecord& last = rounds_.back();
  AgentObservation obs;
  obs.round = last.round + 1;
  obs.config = &config_;
  for (const AgentRecord& a : last.agents) {
    if (a.id == agent_id) {
      obs.own_position = a.position;
    } else {
      obs.other_ids.push_back(a.id);
      obs.other_positions.push_back(a.position);
      obs.other_personalities.push_back(a.personality);
      obs.other_messages.push_back(a.message_tokens);
    }
  }
  return obs;
}

Trajectory ConsensusEnv::trajectory(std::int64_t episode_id) const {
  Trajectory t;
  t.episode_id = episode_id;
  t.config = config_;
  t.rounds = rounds_;
  t.consensus = consensus_;
  t.consensus_round = consensus_round_;
  t.seed = config_.seed;
  return t;
}

Trajectory run_episode(const EnvConfig& config,
                       const std::vector<Personality>& benign_personalities,
                       const std::vector<AgentBackend*>& benign_backends,
                       AgentBackend* attacker_backend, std::int64_t episode_id) {
  if (benign_backends.size() != benign_personalities.size())
    throw std::invalid_argument("run_episode: backend count mismatch");
  if (config.n_malicious == 1 && attacker_backend == nullptr)
    throw std::invalid_argument("run_episode: attacker backend required");

  ConsensusEnv env(config, benign_personalities);
  Rng master(config.seed);
  std::vector<Rng> benign_rngs;
  for (int i = 0; i < config.n_benign; ++i)
    benign_rngs.push_back(master.fork(static_cast<std::uint64_t>(i) + 1));
  Rng attacker_rng = master.fork(0x4adULL);

  env.reset();
  while (!env.done()) {
    std::vector<AgentAction> benign_actions;
    for (int i = 0; i < config.n_benign; ++i)
      benign_actions.push_back(
          benign_backends[static_cast<std::size_t>(i)]->act(env.observation_for(i),
                                                            benign_rngs[static_cast<std::size_t>(i)]));
    std::optional<AgentAction> attack;
    if (config.n_malicious == 1)
      attack = attacker_backend->act(env.observation_for(env.attacker_id()), attacker_rng);
    env.step(benign_actions, attack);
  }
  return env.trajectory(episode_id);
}

}  // namespace macs
