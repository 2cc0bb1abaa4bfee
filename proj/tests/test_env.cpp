#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "macs/env.hpp"
#include "macs/policies.hpp"
#include "macs/rng.hpp"
#include "macs/traj_io.hpp"

using namespace macs;

namespace {

EnvConfig default_config(std::uint64_t seed) {
  EnvConfig c;
  c.seed = seed;
  return c;
}

// Brute-force max-pairwise oracle.
double brute_force_delta(const std::vector<int>& ys) {
  double best = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j)
      best = std::max(best, static_cast<double>(std::abs(ys[i] - ys[j])));
  return best;
}

AgentAction fixed_action(int pos) {
  AgentAction a;
  a.position = pos;
  a.message_tokens = {"pos_" + std::to_string(pos)};
  return a;
}

}  // namespace

TEST_CASE("disagreement hand values and errors") {
  CHECK(disagreement({5, 5, 5}) == doctest::Approx(0.0));
  CHECK(disagreement({0, 20}) == doctest::Approx(20.0));
  CHECK(disagreement({3, 7, 12}) == doctest::Approx(9.0));
  CHECK_THROWS_AS(disagreement({4}), std::invalid_argument);
}

TEST_CASE("disagreement equals brute force, permutation-invariant, zero iff all equal") {
  Rng rng(101);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = rng.uniform_int(2, 6);
    std::vector<int> ys;
    for (int i = 0; i < n; ++i) ys.push_back(rng.uniform_int(0, 20));
    const double d = disagreement(ys);
    CHECK(d == brute_force_delta(ys));
    std::vector<int> shuffled = ys;
    for (int i = n - 1; i > 0; --i)
      std::swap(shuffled[static_cast<std::size_t>(i)],
                shuffled[static_cast<std::size_t>(rng.uniform_int(0, i))]);
    CHECK(disagreement(shuffled) == d);
    const bool all_equal = std::all_of(ys.begin(), ys.end(), [&](int v) { return v == ys[0]; });
    CHECK((d == 0.0) == all_equal);
  }
}

TEST_CASE("reset is deterministic and in range") {
  auto cfg = default_config(42);
  ConsensusEnv a(cfg, {Personality::Stubborn, Personality::Suggestible, Personality::Neutral});
  ConsensusEnv b(cfg, {Personality::Stubborn, Personality::Suggestible, Personality::Neutral});
  const RoundRecord& ra = a.reset();
  const RoundRecord& rb = b.reset();
  REQUIRE(ra.agents.size() == 4);
  for (std::size_t i = 0; i < ra.agents.size(); ++i) {
    CHECK(ra.agents[i].position == rb.agents[i].position);
    CHECK(ra.agents[i].position >= 0);
    CHECK(ra.agents[i].position <= 20);
  }
  CHECK(ra.round == 0);
  CHECK(ra.agents[0].message_tokens.empty());
}

TEST_CASE("reset with no malicious slot yields benign-only agents") {
  auto cfg = default_config(7);
  cfg.n_benign = 4;
  cfg.n_malicious = 0;
  ConsensusEnv env(cfg, {Personality::Neutral, Personality::Neutral, Personality::Neutral,
                         Personality::Neutral});
  const RoundRecord& r = env.reset();
  CHECK(r.agents.size() == 4);
  for (const auto& a : r.agents) CHECK(a.personality != Personality::Malicious);
}

TEST_CASE("personality count mismatch is rejected") {
  auto cfg = default_config(1);
  CHECK_THROWS_AS(ConsensusEnv(cfg, {Personality::Neutral}), std::invalid_argument);
}

TEST_CASE("step reaches consensus when all benign declare the same position") {
  auto cfg = default_config(3);
  ConsensusEnv env(cfg, {Personality::Neutral, Personality::Neutral, Personality::Neutral});
  env.reset();
  if (env.done()) return;  // spawned in consensus; covered elsewhere
  const bool done =
      env.step({fixed_action(7), fixed_action(7), fixed_action(7)}, fixed_action(0));
  CHECK(done);
  CHECK(env.rounds().back().consensus);
  CHECK(env.rounds().back().delta == 0.0);
  // attacker position does not count toward delta
}

TEST_CASE("episode fails at the horizon without consensus") {
  auto cfg = default_config(4);
  ConsensusEnv env(cfg, {Personality::Neutral, Personality::Neutral, Personality::Neutral});
  env.reset();
  bool done = env.done();
  int steps = 0;
  while (!done) {
    done = env.step({fixed_action(3), fixed_action(7), fixed_action(12)}, fixed_action(0));
    ++steps;
    CHECK(env.rounds().back().delta == doctest::Approx(9.0));
  }
  CHECK(steps == 10);
  auto t = env.trajectory(0);
  CHECK_FALSE(t.consensus);
  CHECK(t.rounds_used() == 10);
  CHECK(t.rounds.size() == 11);  // placement + T update rounds
}

TEST_CASE("out-of-range positions are clamped and counted") {
  auto cfg = default_config(5);
  ConsensusEnv env(cfg, {Personality::Neutral, Personality::Neutral, Personality::Neutral});
  env.reset();
  if (env.done()) return;
  env.step({fixed_action(-3), fixed_action(25), fixed_action(10)}, fixed_action(50));
  const auto& rec = env.rounds().back();
  CHECK(rec.agents[0].position == 0);
  CHECK(rec.agents[1].position == 20);
  CHECK(rec.agents[3].position == 20);
  CHECK(env.clamp_warnings() == 3);
}

TEST_CASE("attacker reward terms") {
  RewardConfig rc;
  RoundRecord rec;
  rec.delta = 4.0;
  rec.consensus = false;
  CHECK(attacker_reward(rec, rc) == doctest::Approx(1.0));
  rec.delta = 0.0;
  rec.consensus = true;
  CHECK(attacker_reward(rec, rc) == doctest::Approx(-10.0));
  RewardConfig no_pen;
  no_pen.consensus_penalty_enabled = false;
  CHECK(attacker_reward(rec, no_pen) == doctest::Approx(0.0));
}

TEST_CASE("identical config and seed give bit-identical trajectories") {
  auto cfg = default_config(99);
  std::vector<Personality> ps = {Personality::Stubborn, Personality::Suggestible,
                                 Personality::Neutral};
  std::vector<std::unique_ptr<ScriptedBenignBackend>> backends;
  std::vector<AgentBackend*> raw;
  for (Personality p : ps) {
    backends.push_back(
        std::make_unique<ScriptedBenignBackend>(p, default_personality_params(p)));
    raw.push_back(backends.back().get());
  }
  HeuristicMaliciousBackend attacker;
  auto t1 = run_episode(cfg, ps, raw, &attacker, 0);
  auto t2 = run_episode(cfg, ps, raw, &attacker, 0);
  CHECK(trajectory_to_json_line(t1) == trajectory_to_json_line(t2));
}

TEST_CASE("episode invariants over random seeds") {
  std::vector<Personality> ps = {Personality::Stubborn, Personality::Suggestible,
                                 Personality::Neutral};
  std::vector<std::unique_ptr<ScriptedBenignBackend>> backends;
  std::vector<AgentBackend*> raw;
  for (Personality p : ps) {
    backends.push_back(
        std::make_unique<ScriptedBenignBackend>(p, default_personality_params(p)));
    raw.push_back(backends.back().get());
  }
  HeuristicMaliciousBackend attacker;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto cfg = default_config(seed);
    auto t = run_episode(cfg, ps, raw, &attacker, static_cast<std::int64_t>(seed));
    CHECK(t.rounds_used() >= 1);
    CHECK(t.rounds_used() <= cfg.max_rounds);
    // consensus flag set on at most one round, and only the final one
    int flags = 0;
    for (const auto& r : t.rounds) flags += r.consensus ? 1 : 0;
    CHECK(flags <= 1);
    if (flags == 1) CHECK(t.rounds.back().consensus);
    // indicator-reward sum equals the number of disagreement rounds
    RewardConfig rc;
    rc.consensus_penalty_enabled = false;
    double total = 0.0;
    int disagree_rounds = 0;
    for (const auto& r : t.rounds) {
      total += attacker_reward(r, rc);
      disagree_rounds += r.delta > 0.0 ? 1 : 0;
    }
    CHECK(total == doctest::Approx(disagree_rounds));
  }
}

TEST_CASE("trajectory jsonl round-trips") {
  auto cfg = default_config(12);
  std::vector<Personality> ps = {Personality::Neutral, Personality::Neutral,
                                 Personality::Suggestible};
  std::vector<std::unique_ptr<ScriptedBenignBackend>> backends;
  std::vector<AgentBackend*> raw;
  for (Personality p : ps) {
    backends.push_back(
        std::make_unique<ScriptedBenignBackend>(p, default_personality_params(p)));
    raw.push_back(backends.back().get());
  }
  RandomAttackerBackend attacker;
  std::vector<Trajectory> ts;
  for (int i = 0; i < 5; ++i) {
    cfg.seed = static_cast<std::uint64_t>(100 + i);
    ts.push_back(run_episode(cfg, ps, raw, &attacker, i));
  }
  const auto path = std::filesystem::temp_directory_path() / "macs_traj_test.jsonl";
  write_trajectories(path.string(), ts);
  auto loaded = read_trajectories(path.string());
  REQUIRE(loaded.size() == ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i)
    CHECK(trajectory_to_json_line(loaded[i]) == trajectory_to_json_line(ts[i]));
  std::filesystem::remove(path);
}
