#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "macs/env.hpp"
#include "macs/nn.hpp"
#include "macs/world_model.hpp"

namespace macs {

// Attacker MDP state, 14 features: 3 benign positions / L, 3 benign
// personality one-hots (stubborn, suggestible, neutral), the attacker's
// previous declared position / L, and round / max_rounds.
inline constexpr int kAttackStateDim = 14;

std::array<double, kAttackStateDim> attack_state(
    const std::vector<int>& benign_positions,
    const std::vector<Personality>& benign_personalities, int prev_action, int round,
    const EnvConfig& cfg);

struct DqnConfig {
  int n_actions = 21;  // one per board position
  int hidden = 256;    // two hidden layers of this width
  double gamma = 0.99;
  double lr = 1e-5;
  std::size_t buffer_capacity = 100000;
  std::size_t learning_starts = 10000;
  int target_update_interval = 1000;  // in gradient updates
  int batch_size = 128;
  int n_envs = 8;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_fraction = 0.5;  // of total_steps
  std::int64_t total_steps = 200000;  // env steps summed over parallel envs
  std::int64_t eval_interval = 10000;  // env steps between greedy evals
  int eval_episodes = 64;

  void validate() const;
};

struct QNetWeights {
  nn::DenseParams l1, l2, l3;

  QNetWeights() = default;
  QNetWeights(const DqnConfig& cfg)
      : l1(kAttackStateDim, cfg.hidden),
        l2(cfg.hidden, cfg.hidden),
        l3(cfg.hidden, cfg.n_actions) {}

  void init(Rng& rng) {
    l1.init(rng);
    l2.init(rng);
    l3.init(rng);
  }
  void zero() {
    l1.zero();
    l2.zero();
    l3.zero();
  }

  template <class F>
  void visit(F&& f) {
    f("q.l1", l1);
    f("q.l2", l2);
    f("q.l3", l3);
  }
};

std::vector<double> q_values(const QNetWeights& w, const DqnConfig& cfg,
                             const double* state);
// Greedy action; ties break toward the lowest action index.
int greedy_action(const QNetWeights& w, const DqnConfig& cfg, const double* state);
int epsilon_greedy_action(const QNetWeights& w, const DqnConfig& cfg, const double* state,
                          double epsilon, Rng& rng);

struct DqnTransition {
  std::array<double, kAttackStateDim> state{};
  int action = 0;
  double reward = 0.0;
  std::array<double, kAttackStateDim> next_state{};
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const DqnTransition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  const DqnTransition& at(std::size_t i) const { return data_[i]; }

  // Uniform sample without replacement; throws if batch > size.
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;
  std::vector<DqnTransition> data_;
};

// One TD(0) update on a uniform minibatch; returns the batch loss
//   mean_i (Q(s_i, a_i) - [r_i + gamma * (1 - done_i) * max_a Q_target(s'_i, a)])^2.
double td_update(QNetWeights& online, const QNetWeights& target, const DqnConfig& cfg,
                 const ReplayBuffer& buffer, const std::vector<std::size_t>& batch,
                 nn::Adam& opt);

// Surrogate rollout environment: benign dynamics come from the learned world
// model, reward and termination mirror the real environment.
class SurrogateEnv {
 public:
  SurrogateEnv(const WorldModelWeights* wm, const WorldModelConfig* wm_cfg,
               EnvConfig env_cfg);

  // Uniform placement of benign agents and the attacker.
  void reset(const std::vector<Personality>& benign_personalities, Rng& rng);
  // Applies the attacker action to the next benign transition. Returns the
  // reward; done() reports termination.
  double step(int attacker_action);

  std::array<double, kAttackStateDim> state() const;
  bool done() const { return done_; }
  int round() const { return round_; }
  double delta() const;
  const std::vector<int>& positions() const { return positions_; }

 private:
  const WorldModelWeights* wm_;
  const WorldModelConfig* wm_cfg_;
  EnvConfig env_cfg_;
  std::vector<Personality> personalities_;
  std::vector<int> positions_;
  int prev_action_ = 0;
  int round_ = 0;
  bool done_ = false;
};

struct DqnCurvePoint {
  std::int64_t step = 0;
  double epsilon = 0.0;
  double mean_return = 0.0;
  double surrogate_consensus_rate = 0.0;
};

struct DqnTrainResult {
  QNetWeights best;   // lowest surrogate consensus rate at a greedy eval
  QNetWeights final;
  std::vector<DqnCurvePoint> curve;
  std::int64_t best_step = -1;
};

// Greedy evaluation inside the surrogate: returns (mean return, consensus
// rate) over eval episodes with per-episode seeds derived from seed.
std::pair<double, double> surrogate_eval(const QNetWeights& q, const DqnConfig& cfg,
                                         const WorldModelWeights& wm,
                                         const WorldModelConfig& wm_cfg,
                                         const EnvConfig& env_cfg, int episodes,
                                         std::uint64_t seed);

DqnTrainResult train_attacker(const WorldModelWeights& wm, const WorldModelConfig& wm_cfg,
                              const EnvConfig& env_cfg, const DqnConfig& cfg,
                              std::uint64_t seed);

void write_dqn_curve_csv(const std::string& path, const std::vector<DqnCurvePoint>& curve);

// Deployed greedy attacker. Personalities of the benign agents come either
// from ground truth or from classifier profiling; the backend tracks its own
// previous declared position across rounds and must be reset per episode.
class RlAttackerBackend : public AgentBackend {
 public:
  RlAttackerBackend(const QNetWeights* q, const DqnConfig* cfg,
                    std::vector<Personality> benign_attributes);

  void begin_episode();
  AgentAction act(const AgentObservation& obs, Rng& rng) override;

 private:
  const QNetWeights* q_;
  const DqnConfig* cfg_;
  std::vector<Personality> attributes_;
  int prev_action_ = 0;
  bool has_prev_ = false;
};

void save_dqn_checkpoint(const std::string& path, const DqnConfig& cfg, QNetWeights& w);
DqnConfig load_dqn_checkpoint(const std::string& path, QNetWeights& w);

}  // namespace macs
