#pragma once

#include <vector>

#include "macs/env.hpp"

namespace macs {

enum class TargetRule { MeanOfVisible, RandomNeighbor, BlendSelfMean };

struct PersonalityParams {
  double move_fraction = 0.5;    // alpha
  double stay_probability = 0.0;
  double noise_probability = 0.05;  // +/-1 jitter
  TargetRule target_rule = TargetRule::BlendSelfMean;
};

// Defaults calibrated so the no-attacker baseline reaches consensus in
// roughly 4-5 rounds on average.
PersonalityParams default_personality_params(Personality p);

// Personality-specific phrase pools, pairwise disjoint at the token level so
// a rendered message identifies its sender's type. Each phrase is a short
// token list; the declared position is appended as "pos_<n>".
const std::vector<std::vector<std::string>>& phrase_pool(Personality p);

std::vector<std::string> render_message(Personality p, int position, Rng& rng);

// Round half away from zero (ties like 0.5 move outward).
int round_half_away(double x);

// Scripted benign policy. Reads positions only; the message channel exists
// for richer backends. Movement: target per target_rule, step =
// round(alpha * (target - own)) with a minimum step of 1 toward a differing
// target, +/-1 noise with noise_probability, all clamped to [0, L].
AgentAction benign_act(Personality personality, const PersonalityParams& params,
                       const AgentObservation& obs, Rng& rng);

// Declares the position maximizing the minimum distance to visible benign
// positions (ties resolve to the lower position).
AgentAction heuristic_malicious_act(const AgentObservation& obs, Rng& rng);

// Scripted-policy backends.
class ScriptedBenignBackend : public AgentBackend {
 public:
  ScriptedBenignBackend(Personality p, PersonalityParams params)
      : personality_(p), params_(params) {}
  AgentAction act(const AgentObservation& obs, Rng& rng) override {
    return benign_act(personality_, params_, obs, rng);
  }

 private:
  Personality personality_;
  PersonalityParams params_;
};

class HeuristicMaliciousBackend : public AgentBackend {
 public:
  AgentAction act(const AgentObservation& obs, Rng& rng) override {
    return heuristic_malicious_act(obs, rng);
  }
};

// Declares uniformly random positions; used when collecting the world-model
// training corpus.
class RandomAttackerBackend : public AgentBackend {
 public:
  AgentAction act(const AgentObservation& obs, Rng& rng) override;
};

// Acts like a cooperative participant (declares the mean of visible benign
// positions); used for the guessed attacker's profiling episode.
class NeutralProfilingBackend : public AgentBackend {
 public:
  AgentAction act(const AgentObservation& obs, Rng& rng) override;
};

}  // namespace macs
