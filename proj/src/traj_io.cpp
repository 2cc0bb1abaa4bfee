#include "macs/traj_io.hpp"

#include <fstream>
#include <stdexcept>

namespace macs {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

nlohmann::json env_config_to_json(const EnvConfig& c) {
  ojson j;
  j["max_position"] = c.max_position;
  j["max_rounds"] = c.max_rounds;
  j["n_benign"] = c.n_benign;
  j["n_malicious"] = c.n_malicious;
  j["consensus_tolerance"] = c.consensus_tolerance;
  j["full_visibility"] = c.full_visibility;
  j["seed"] = c.seed;
  return j;
}

EnvConfig env_config_from_json(const nlohmann::json& j) {
  EnvConfig c;
  c.max_position = j.at("max_position").get<int>();
  c.max_rounds = j.at("max_rounds").get<int>();
  c.n_benign = j.at("n_benign").get<int>();
  c.n_malicious = j.at("n_malicious").get<int>();
  c.consensus_tolerance = j.at("consensus_tolerance").get<double>();
  c.full_visibility = j.at("full_visibility").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::string trajectory_to_json_line(const Trajectory& t) {
  ojson j;
  j["format_version"] = kTrajectoryFormatVersion;
  j["episode_id"] = t.episode_id;
  j["config"] = env_config_to_json(t.config);
  ojson rounds = ojson::array();
  for (const RoundRecord& r : t.rounds) {
    ojson jr;
    jr["t"] = r.round;
    ojson agents = ojson::array();
    for (const AgentRecord& a : r.agents) {
      ojson ja;
      ja["id"] = a.id;
      ja["personality"] = personality_name(a.personality);
      ja["position"] = a.position;
      ja["message_tokens"] = a.message_tokens;
      agents.push_back(std::move(ja));
    }
    jr["agents"] = std::move(agents);
    jr["delta"] = r.delta;
    jr["consensus"] = r.consensus;
    rounds.push_back(std::move(jr));
  }
  j["rounds"] = std::move(rounds);
  ojson outcome;
  if (t.consensus) {
    outcome["consensus_round"] = t.consensus_round;
  } else {
    outcome["failure"] = true;
  }
  j["outcome"] = std::move(outcome);
  j["seed"] = t.seed;
  return j.dump();
}

Trajectory trajectory_from_json_line(const std::string& line) {
  json j = json::parse(line);
  if (j.value("format_version", -1) != kTrajectoryFormatVersion)
    throw std::runtime_error("trajectory line: unsupported format_version");
  Trajectory t;
  t.episode_id = j.at("episode_id").get<std::int64_t>();
  t.config = env_config_from_json(j.at("config"));
  for (const auto& jr : j.at("rounds")) {
    RoundRecord r;
    r.round = jr.at("t").get<int>();
    for (const auto& ja : jr.at("agents")) {
      AgentRecord a;
      a.id = ja.at("id").get<int>();
      a.personality = personality_from_name(ja.at("personality").get<std::string>());
      a.position = ja.at("position").get<int>();
      a.message_tokens = ja.at("message_tokens").get<std::vector<std::string>>();
      r.agents.push_back(std::move(a));
    }
    r.delta = jr.at("delta").get<double>();
    r.consensus = jr.at("consensus").get<bool>();
    t.rounds.push_back(std::move(r));
  }
  const auto& outcome = j.at("outcome");
  if (outcome.contains("consensus_round")) {
    t.consensus = true;
    t.consensus_round = outcome.at("consensus_round").get<int>();
  } else {
    t.consensus = false;
    t.consensus_round = -1;
  }
  t.seed = j.at("seed").get<std::uint64_t>();
  return t;
}

void write_trajectories(const std::string& path, const std::vector<Trajectory>& ts) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectories: " + path);
  for (const Trajectory& t : ts) out << trajectory_to_json_line(t) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Trajectory> read_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read trajectories: " + path);
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(trajectory_from_json_line(line));
  }
  return out;
}

}  // namespace macs
