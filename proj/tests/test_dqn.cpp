#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <memory>

#include "macs/dqn.hpp"
#include "macs/policies.hpp"
#include "macs/world_model.hpp"

using namespace macs;

namespace {

DqnConfig tiny_cfg() {
  DqnConfig c;
  c.hidden = 32;
  c.buffer_capacity = 2000;
  c.learning_starts = 256;
  c.batch_size = 32;
  c.total_steps = 4000;
  c.eval_interval = 1000;
  c.eval_episodes = 16;
  c.lr = 1e-3;
  return c;
}

// World model trained on a small scripted corpus; shared across test cases.
struct TrainedWm {
  WorldModelConfig cfg;
  WorldModelWeights weights;
};

const TrainedWm& trained_wm() {
  static TrainedWm wm = [] {
    std::vector<Personality> ps = {Personality::Stubborn, Personality::Suggestible,
                                   Personality::Neutral};
    std::vector<std::unique_ptr<ScriptedBenignBackend>> backends;
    std::vector<AgentBackend*> raw;
    for (Personality p : ps) {
      backends.push_back(
          std::make_unique<ScriptedBenignBackend>(p, default_personality_params(p)));
      raw.push_back(backends.back().get());
    }
    RandomAttackerBackend attacker;
    std::vector<Trajectory> trajs;
    for (int i = 0; i < 80; ++i) {
      EnvConfig cfg;
      cfg.seed = 4000 + static_cast<std::uint64_t>(i);
      trajs.push_back(run_episode(cfg, ps, raw, &attacker, i));
    }
    TrainedWm out;
    out.cfg.embedding_dim = 8;
    out.cfg.hidden_dim = 32;
    out.cfg.epochs = 30;
    out.cfg.dropout = 0.0;
    out.weights = wm_train(build_wm_dataset(trajs), out.cfg, 5).best;
    return out;
  }();
  return wm;
}

}  // namespace

TEST_CASE("attack state layout") {
  EnvConfig env;
  auto s = attack_state({0, 10, 20},
                        {Personality::Stubborn, Personality::Suggestible,
                         Personality::Neutral},
                        5, 3, env);
  CHECK(s[0] == doctest::Approx(0.0));
  CHECK(s[1] == doctest::Approx(0.5));
  CHECK(s[2] == doctest::Approx(1.0));
  // one-hots: agent 0 stubborn, agent 1 suggestible, agent 2 neutral
  CHECK(s[3] == 1.0);
  CHECK(s[4] == 0.0);
  CHECK(s[7] == 1.0);
  CHECK(s[11] == 1.0);
  CHECK(s[12] == doctest::Approx(0.25));
  CHECK(s[13] == doctest::Approx(0.3));
  double sum_onehot = 0.0;
  for (int i = 3; i < 12; ++i) sum_onehot += s[static_cast<std::size_t>(i)];
  CHECK(sum_onehot == doctest::Approx(3.0));
  CHECK_THROWS_AS(attack_state({1, 2}, {Personality::Neutral, Personality::Neutral}, 0, 0,
                               env),
                  std::invalid_argument);
}

TEST_CASE("epsilon=1 samples actions uniformly") {
  DqnConfig cfg = tiny_cfg();
  QNetWeights q(cfg);
  Rng init(1);
  q.init(init);
  double state[kAttackStateDim] = {0};
  Rng rng(99);
  std::vector<int> counts(static_cast<std::size_t>(cfg.n_actions), 0);
  const int N = 42000;
  for (int i = 0; i < N; ++i)
    counts[static_cast<std::size_t>(
        epsilon_greedy_action(q, cfg, state, 1.0, rng))] += 1;
  // chi-square against uniform; 20 dof, 99.9th percentile ~= 45.3
  const double expect = static_cast<double>(N) / cfg.n_actions;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(chi2 < 45.3);
}

TEST_CASE("greedy action is the lowest argmax and invariant to epsilon=0 draws") {
  DqnConfig cfg = tiny_cfg();
  QNetWeights q(cfg);
  q.zero();  // all q-values equal -> ties resolve to action 0
  double state[kAttackStateDim] = {0.5};
  CHECK(greedy_action(q, cfg, state) == 0);
  Rng rng(3);
  CHECK(epsilon_greedy_action(q, cfg, state, 0.0, rng) == 0);
  // bias one action upward through its output-layer bias
  q.l3.b(13) = 1.0;
  CHECK(greedy_action(q, cfg, state) == 13);
}

TEST_CASE("replay buffer ring semantics and sampling bounds") {
  ReplayBuffer buf(8);
  Rng rng(5);
  CHECK_THROWS_AS(buf.sample_indices(1, rng), std::invalid_argument);
  for (int i = 0; i < 20; ++i) {
    DqnTransition t;
    t.action = i;
    buf.push(t);
  }
  CHECK(buf.size() == 8);
  // oldest entries were overwritten: remaining actions are 12..19
  std::vector<int> actions;
  for (std::size_t i = 0; i < buf.size(); ++i) actions.push_back(buf.at(i).action);
  std::sort(actions.begin(), actions.end());
  CHECK(actions.front() == 12);
  CHECK(actions.back() == 19);
  auto idx = buf.sample_indices(8, rng);
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  CHECK(idx.size() == 8);  // without replacement
}

TEST_CASE("td targets: gamma=0 regresses to immediate reward") {
  DqnConfig cfg = tiny_cfg();
  cfg.gamma = 0.0;
  QNetWeights online(cfg);
  Rng init(7);
  online.init(init);
  QNetWeights target = online;
  ReplayBuffer buf(64);
  DqnTransition t;
  t.state.fill(0.3);
  t.action = 4;
  t.reward = 1.0;
  t.done = false;
  buf.push(t);
  nn::Adam opt(online, nn::AdamConfig{});
  Rng rng(8);
  double last = 1e18;
  for (int i = 0; i < 400; ++i)
    last = td_update(online, target, cfg, buf, buf.sample_indices(1, rng), opt);
  CHECK(last < 1e-3);
  CHECK(q_values(online, cfg, t.state.data())[4] == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("done transitions regress to the terminal reward") {
  DqnConfig cfg = tiny_cfg();
  QNetWeights online(cfg);
  Rng init(9);
  online.init(init);
  QNetWeights target;
  target = online;
  // a huge target net would leak through gamma * max_a if done were ignored
  target.l3.b(0) = 100.0;
  ReplayBuffer buf(64);
  DqnTransition t;
  t.state.fill(0.1);
  t.action = 2;
  t.reward = -10.0;
  t.done = true;
  buf.push(t);
  nn::Adam opt(online, nn::AdamConfig{});
  Rng rng(10);
  for (int i = 0; i < 600; ++i)
    td_update(online, target, cfg, buf, buf.sample_indices(1, rng), opt);
  CHECK(q_values(online, cfg, t.state.data())[2] == doctest::Approx(-10.0).epsilon(0.05));
}

TEST_CASE("surrogate env mirrors the reward and termination rules") {
  const TrainedWm& wm = trained_wm();
  EnvConfig env_cfg;
  SurrogateEnv env(&wm.weights, &wm.cfg, env_cfg);
  Rng rng(77);
  std::vector<Personality> ps = {Personality::Stubborn, Personality::Suggestible,
                                 Personality::Neutral};
  env.reset(ps, rng);
  int steps = 0;
  double total = 0.0;
  while (!env.done()) {
    REQUIRE(steps < env_cfg.max_rounds);
    const double r = env.step(10);
    total += r;
    ++steps;
    for (int p : env.positions()) {
      CHECK(p >= 0);
      CHECK(p <= env_cfg.max_position);
    }
  }
  CHECK(steps <= env_cfg.max_rounds);
  const bool consensus = env.delta() == 0.0;
  if (consensus)
    CHECK(total <= steps - 1 + 1e-9);  // last round paid the -10 penalty
  CHECK_THROWS_AS(env.step(0), std::logic_error);
  CHECK_THROWS_AS([&] {
    SurrogateEnv e2(&wm.weights, &wm.cfg, env_cfg);
    Rng r2(1);
    e2.reset(ps, r2);
    e2.step(99);
  }(), std::invalid_argument);
}

TEST_CASE("training runs, evaluates and is reproducible") {
  const TrainedWm& wm = trained_wm();
  EnvConfig env_cfg;
  DqnConfig cfg = tiny_cfg();
  auto a = train_attacker(wm.weights, wm.cfg, env_cfg, cfg, 42);
  auto b = train_attacker(wm.weights, wm.cfg, env_cfg, cfg, 42);
  REQUIRE(!a.curve.empty());
  CHECK(a.curve.size() == b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].step == b.curve[i].step);
    CHECK(a.curve[i].mean_return == b.curve[i].mean_return);
    CHECK(a.curve[i].surrogate_consensus_rate == b.curve[i].surrogate_consensus_rate);
  }
  auto ta = nn::named_tensors(a.final);
  auto tb = nn::named_tensors(b.final);
  for (std::size_t i = 0; i < ta.size(); ++i)
    CHECK(ta[i].tensor->data == tb[i].tensor->data);
  CHECK(a.best_step >= 0);
  // epsilon decays along the curve
  CHECK(a.curve.back().epsilon < a.curve.front().epsilon);
}

TEST_CASE("deployed attacker emits valid actions and malicious-pool messages") {
  DqnConfig cfg = tiny_cfg();
  QNetWeights q(cfg);
  Rng init(3);
  q.init(init);
  std::vector<Personality> attrs = {Personality::Stubborn, Personality::Suggestible,
                                    Personality::Neutral};
  RlAttackerBackend backend(&q, &cfg, attrs);
  backend.begin_episode();
  AgentObservation obs;
  EnvConfig env_cfg;
  obs.config = &env_cfg;
  obs.own_position = 5;
  obs.round = 1;
  obs.other_ids = {0, 1, 2};
  obs.other_positions = {3, 9, 15};
  obs.other_personalities = attrs;
  obs.other_messages.resize(3);
  Rng rng(12);
  auto act = backend.act(obs, rng);
  CHECK(act.position >= 0);
  CHECK(act.position <= 20);
  bool in_pool = false;
  for (const auto& phrase : phrase_pool(Personality::Malicious))
    if (!act.message_tokens.empty() && phrase[0] == act.message_tokens[0]) in_pool = true;
  CHECK(in_pool);
  // same observation, same episode state -> deterministic action
  RlAttackerBackend backend2(&q, &cfg, attrs);
  backend2.begin_episode();
  Rng rng2(12);
  CHECK(backend2.act(obs, rng2).position == act.position);
}

TEST_CASE("dqn checkpoint round-trips") {
  DqnConfig cfg = tiny_cfg();
  QNetWeights w(cfg);
  Rng rng(21);
  w.init(rng);
  const auto path =
      (std::filesystem::temp_directory_path() / "macs_dqn_test.ckpt.json").string();
  save_dqn_checkpoint(path, cfg, w);
  QNetWeights loaded;
  DqnConfig cfg2 = load_dqn_checkpoint(path, loaded);
  CHECK(cfg2.hidden == cfg.hidden);
  auto tw = nn::named_tensors(w);
  auto tl = nn::named_tensors(loaded);
  for (std::size_t i = 0; i < tw.size(); ++i)
    CHECK(tw[i].tensor->data == tl[i].tensor->data);
  std::filesystem::remove(path);
}
