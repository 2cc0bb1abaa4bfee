#include "macs/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace macs {

PersonalityParams default_personality_params(Personality p) {
  PersonalityParams out;
  switch (p) {
    case Personality::Stubborn:
      out.move_fraction = 0.35;
      out.stay_probability = 0.2;
      out.target_rule = TargetRule::MeanOfVisible;
      break;
    case Personality::Suggestible:
      out.move_fraction = 0.9;
      out.stay_probability = 0.0;
      out.target_rule = TargetRule::RandomNeighbor;
      break;
    case Personality::Neutral:
      out.move_fraction = 0.5;
      out.stay_probability = 0.05;
      out.target_rule = TargetRule::BlendSelfMean;
      break;
    case Personality::Malicious:
      throw std::invalid_argument("no scripted benign params for the malicious type");
  }
  out.noise_probability = 0.05;
  return out;
}

const std::vector<std::vector<std::string>>& phrase_pool(Personality p) {
  static const std::vector<std::vector<std::string>> stubborn = {
      {"rather_not_move", "from_here"},
      {"holding_my_ground", "firmly"},
      {"staying_put", "feels_right"},
      {"reluctant_to_budge", "much"},
      {"moving_far", "seems_unwise"},
      {"anchored", "near_my_spot"},
  };
  static const std::vector<std::vector<std::string>> suggestible = {
      {"happy_to_follow", "you_all"},
      {"count_me_in", "wherever"},
      {"joining_your_side", "now"},
      {"lead_the_way", "friends"},
      {"going_along", "with_the_group"},
      {"your_call", "works_for_me"},
  };
  static const std::vector<std::vector<std::string>> neutral = {
      {"lets_meet", "in_the_middle"},
      {"balancing", "our_positions"},
      {"converging", "step_by_step"},
      {"aiming_for", "common_ground"},
      {"splitting_the_difference", "fairly"},
      {"steady_progress", "toward_agreement"},
  };
  static const std::vector<std::vector<std::string>> malicious = {
      {"maybe_wait", "before_moving"},
      {"the_far_end", "looks_better"},
      {"dont_rush", "to_agree"},
      {"reconsider", "that_spot"},
      {"spreading_out", "seems_safer"},
      {"trust_me", "try_elsewhere"},
  };
  switch (p) {
    case Personality::Stubborn: return stubborn;
    case Personality::Suggestible: return suggestible;
    case Personality::Neutral: return neutral;
    case Personality::Malicious: return malicious;
  }
  return neutral;
}

std::vector<std::string> render_message(Personality p, int position, Rng& rng) {
  const auto& pool = phrase_pool(p);
  const auto& phrase = pool[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
  std::vector<std::string> tokens = phrase;
  tokens.push_back("pos_" + std::to_string(position));
  return tokens;
}

int round_half_away(double x) {
  return static_cast<int>(x >= 0.0 ? std::floor(x + 0.5) : std::ceil(x - 0.5));
}

namespace {

double target_position(TargetRule rule, const AgentObservation& obs, Rng& rng) {
  const auto& others = obs.other_positions;
  switch (rule) {
    case TargetRule::MeanOfVisible: {
      double sum = obs.own_position;
      for (int p : others) sum += p;
      return sum / static_cast<double>(others.size() + 1);
    }
    case TargetRule::RandomNeighbor:
      return others[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(others.size()) - 1))];
    case TargetRule::BlendSelfMean: {
      double sum = 0.0;
      for (int p : others) sum += p;
      return sum / static_cast<double>(others.size());
    }
  }
  return obs.own_position;
}

}  // namespace

AgentAction benign_act(Personality personality, const PersonalityParams& params,
                       const AgentObservation& obs, Rng& rng) {
  if (obs.other_positions.empty())
    throw std::invalid_argument("benign_act: no visible positions");
  const int L = obs.config->max_position;

  int next = obs.own_position;
  const bool stay = rng.bernoulli(params.stay_probability);
  const double target = target_position(params.target_rule, obs, rng);
  if (!stay) {
    int step = round_half_away(params.move_fraction * (target - obs.own_position));
    // Integer rounding would freeze small gaps; always take at least one step
    // toward a differing target.
    if (step == 0 && round_half_away(target) != obs.own_position)
      step = target > obs.own_position ? 1 : -1;
    next = obs.own_position + step;
  }
  if (rng.bernoulli(params.noise_probability)) next += rng.bernoulli(0.5) ? 1 : -1;
  next = std::clamp(next, 0, L);

  AgentAction act;
  act.position = next;
  act.message_tokens = render_message(personality, next, rng);
  return act;
}

AgentAction heuristic_malicious_act(const AgentObservation& obs, Rng& rng) {
  std::vector<int> benign;
  for (std::size_t i = 0; i < obs.other_positions.size(); ++i)
    if (obs.other_personalities[i] != Personality::Malicious)
      benign.push_back(obs.other_positions[i]);
  if (benign.empty())
    throw std::invalid_argument("heuristic_malicious_act: no visible benign positions");
  const int L = obs.config->max_position;

  int best = 0;
  int best_dist = -1;
  for (int p = 0; p <= L; ++p) {
    int d = L + 1;
    for (int b : benign) d = std::min(d, std::abs(p - b));
    if (d > best_dist) {
      best_dist = d;
      best = p;
    }
  }
  AgentAction act;
  act.position = best;
  act.message_tokens = render_message(Personality::Malicious, best, rng);
  return act;
}

AgentAction RandomAttackerBackend::act(const AgentObservation& obs, Rng& rng) {
  AgentAction act;
  act.position = rng.uniform_int(0, obs.config->max_position);
  act.message_tokens = render_message(Personality::Malicious, act.position, rng);
  return act;
}

AgentAction NeutralProfilingBackend::act(const AgentObservation& obs, Rng& rng) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < obs.other_positions.size(); ++i) {
    if (obs.other_personalities[i] != Personality::Malicious) {
      sum += obs.other_positions[i];
      ++n;
    }
  }
  AgentAction act;
  act.position = n > 0 ? round_half_away(sum / n) : obs.own_position;
  act.message_tokens = render_message(Personality::Malicious, act.position, rng);
  return act;
}

}  // namespace macs
