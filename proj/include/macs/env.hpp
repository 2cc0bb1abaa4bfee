#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "macs/rng.hpp"

namespace macs {

enum class Personality { Stubborn = 0, Suggestible = 1, Neutral = 2, Malicious = 3 };

const char* personality_name(Personality p);
Personality personality_from_name(const std::string& name);
inline int personality_id(Personality p) { return static_cast<int>(p); }

struct EnvConfig {
  int max_position = 20;       // positions live on {0..max_position}
  int max_rounds = 10;         // update rounds; horizon expiry = failure
  int n_benign = 3;
  int n_malicious = 1;         // 0 or 1
  double consensus_tolerance = 0.0;
  bool full_visibility = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AgentRecord {
  int id = 0;
  Personality personality = Personality::Neutral;
  int position = 0;
  std::vector<std::string> message_tokens;
};

struct RoundRecord {
  int round = 0;
  std::vector<AgentRecord> agents;
  double delta = 0.0;     // over benign agents only
  bool consensus = false;
};

struct Trajectory {
  std::int64_t episode_id = 0;
  EnvConfig config;
  std::vector<RoundRecord> rounds;
  bool consensus = false;
  int consensus_round = -1;  // -1 on failure
  std::uint64_t seed = 0;

  // Rounds charged to the episode: the consensus round (at least 1, covering
  // the all-equal-at-placement corner) or max_rounds on failure.
  int rounds_used() const;
};

// What any agent sees when producing its round-t action: the previous round's
// positions and messages. Personalities of others are carried for the
// attacker's benefit; scripted benign policies do not read them.
struct AgentObservation {
  int own_position = 0;
  int round = 0;  // the round being generated
  std::vector<int> other_ids;
  std::vector<int> other_positions;
  std::vector<Personality> other_personalities;
  std::vector<std::vector<std::string>> other_messages;
  const EnvConfig* config = nullptr;
};

struct AgentAction {
  std::vector<std::string> message_tokens;
  int position = 0;
};

// Pluggable agent policy. Implementations are pure functions of
// (observation, rng state) so instances can be shared across episodes.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual AgentAction act(const AgentObservation& obs, Rng& rng) = 0;
};

// Delta = max pairwise |y_i - y_j|. Throws if fewer than 2 positions.
double disagreement(const std::vector<int>& benign_positions);

struct RewardConfig {
  bool step_indicator = true;
  bool consensus_penalty_enabled = true;
  double consensus_penalty = -10.0;
};

// Per-round attacker reward: 1{delta > 0} plus the consensus penalty on the
// round where benign consensus is detected.
double attacker_reward(const RoundRecord& record, const RewardConfig& cfg);

// Synchronous multi-round 1-D consensus environment. Agent ids: benign agents
// are 0..n_benign-1, the malicious agent (when present) is n_benign.
class ConsensusEnv {
 public:
  ConsensusEnv(EnvConfig config, std::vector<Personality> benign_personalities);

  // Places every agent independently and uniformly on {0..L}. Round 0 has no
  // messages. Returns the placement record; consensus at placement terminates
  // the episode immediately with consensus_round = 0.
  const RoundRecord& reset();

  // One synchronous round: all declared actions from this round become
  // visible context for the next. Out-of-range positions are clamped and
  // counted in clamp_warnings(). Returns true when the episode is over
  // (benign consensus or horizon expiry).
  bool step(const std::vector<AgentAction>& benign_actions,
            const std::optional<AgentAction>& attacker_action);

  AgentObservation observation_for(int agent_id) const;

  bool done() const { return done_; }
  int current_round() const { return static_cast<int>(rounds_.size()) - 1; }
  const std::vector<RoundRecord>& rounds() const { return rounds_; }
  const EnvConfig& config() const { return config_; }
  const std::vector<Personality>& benign_personalities() const { return benign_personalities_; }
  int n_agents() const { return config_.n_benign + config_.n_malicious; }
  int attacker_id() const { return config_.n_benign; }
  long clamp_warnings() const { return clamp_warnings_; }

  Trajectory trajectory(std::int64_t episode_id) const;

 private:
  void finish_round(RoundRecord& rec);

  EnvConfig config_;
  std::vector<Personality> benign_personalities_;
  Rng rng_;
  std::vector<RoundRecord> rounds_;
  bool done_ = false;
  bool consensus_ = false;
  int consensus_round_ = -1;
  long clamp_warnings_ = 0;
};

// Drives a full episode: scripted benign backends (one per benign agent) and
// an optional attacker backend, each with an rng stream derived from the
// config seed.
Trajectory run_episode(const EnvConfig& config,
                       const std::vector<Personality>& benign_personalities,
                       const std::vector<AgentBackend*>& benign_backends,
                       AgentBackend* attacker_backend, std::int64_t episode_id);

}  // namespace macs
