#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "macs/env.hpp"

namespace macs {

inline constexpr int kTrajectoryFormatVersion = 1;

// JSON-lines trajectory persistence, one episode per line:
//   {format_version, episode_id, config, rounds:[{t, agents:[{id, personality,
//    position, message_tokens}], delta, consensus}], outcome, seed}
// Field ordering is stable so identical runs produce byte-identical files.
std::string trajectory_to_json_line(const Trajectory& t);
Trajectory trajectory_from_json_line(const std::string& line);

void write_trajectories(const std::string& path, const std::vector<Trajectory>& ts);
std::vector<Trajectory> read_trajectories(const std::string& path);

nlohmann::json env_config_to_json(const EnvConfig& c);
EnvConfig env_config_from_json(const nlohmann::json& j);

}  // namespace macs
