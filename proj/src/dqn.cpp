#include "macs/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "macs/checkpoint.hpp"
#include "macs/parallel.hpp"
#include "macs/policies.hpp"

namespace macs {

using nlohmann::json;

void DqnConfig::validate() const {
  if (n_actions <= 1 || hidden <= 0 || batch_size <= 0 || n_envs <= 0 ||
      target_update_interval <= 0 || eval_episodes <= 0)
    throw std::invalid_argument("DqnConfig: non-positive field");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("DqnConfig: bad gamma");
  if (lr <= 0.0) throw std::invalid_argument("DqnConfig: bad lr");
  if (buffer_capacity < static_cast<std::size_t>(batch_size) ||
      learning_starts < static_cast<std::size_t>(batch_size))
    throw std::invalid_argument("DqnConfig: buffer smaller than a batch");
  if (eps_start < eps_end || eps_fraction <= 0.0 || eps_fraction > 1.0)
    throw std::invalid_argument("DqnConfig: bad epsilon schedule");
  if (total_steps <= 0 || eval_interval <= 0)
    throw std::invalid_argument("DqnConfig: bad step counts");
}

std::array<double, kAttackStateDim> attack_state(
    const std::vector<int>& benign_positions,
    const std::vector<Personality>& benign_personalities, int prev_action, int round,
    const EnvConfig& cfg) {
  if (benign_positions.size() != 3 || benign_personalities.size() != 3)
    throw std::invalid_argument("attack_state: expected exactly 3 benign agents");
  std::array<double, kAttackStateDim> s{};
  const double L = cfg.max_position;
  for (int i = 0; i < 3; ++i)
    s[static_cast<std::size_t>(i)] = benign_positions[static_cast<std::size_t>(i)] / L;
  for (int i = 0; i < 3; ++i) {
    const int pid = personality_id(benign_personalities[static_cast<std::size_t>(i)]);
    if (pid < 0 || pid > 2)
      throw std::invalid_argument("attack_state: benign personality expected");
    s[static_cast<std::size_t>(3 + 3 * i + pid)] = 1.0;
  }
  s[12] = prev_action / L;
  s[13] = static_cast<double>(round) / cfg.max_rounds;
  return s;
}

namespace {

struct QCache {
  std::vector<double> pre1, h1, pre2, h2, pre3, q;
};

void q_forward(const QNetWeights& w, const DqnConfig& cfg, const double* state,
               QCache& c) {
  c.pre1.resize(static_cast<std::size_t>(cfg.hidden));
  c.h1.resize(static_cast<std::size_t>(cfg.hidden));
  c.pre2.resize(static_cast<std::size_t>(cfg.hidden));
  c.h2.resize(static_cast<std::size_t>(cfg.hidden));
  c.pre3.resize(static_cast<std::size_t>(cfg.n_actions));
  c.q.resize(static_cast<std::size_t>(cfg.n_actions));
  nn::dense_forward(w.l1, nn::Activation::ReLU, state, c.pre1.data(), c.h1.data());
  nn::dense_forward(w.l2, nn::Activation::ReLU, c.h1.data(), c.pre2.data(), c.h2.data());
  nn::dense_forward(w.l3, nn::Activation::Identity, c.h2.data(), c.pre3.data(),
                    c.q.data());
}

void q_backward(const QNetWeights& w, const double* state, const QCache& c,
                const double* dq, QNetWeights& g) {
  const int H = static_cast<int>(c.h1.size());
  const int A = static_cast<int>(c.q.size());
  std::vector<double> dh2(static_cast<std::size_t>(H), 0.0);
  std::vector<double> dpre3(static_cast<std::size_t>(A));
  nn::dense_backward(w.l3, nn::Activation::Identity, c.h2.data(), c.pre3.data(), dq,
                     dpre3.data(), dh2.data(), g.l3);
  std::vector<double> dh1(static_cast<std::size_t>(H), 0.0);
  std::vector<double> dpre2(static_cast<std::size_t>(H));
  nn::dense_backward(w.l2, nn::Activation::ReLU, c.h1.data(), c.pre2.data(), dh2.data(),
                     dpre2.data(), dh1.data(), g.l2);
  std::vector<double> dpre1(static_cast<std::size_t>(H));
  nn::dense_backward(w.l1, nn::Activation::ReLU, state, c.pre1.data(), dh1.data(),
                     dpre1.data(), nullptr, g.l1);
}

int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
  return best;
}

}  // namespace

std::vector<double> q_values(const QNetWeights& w, const DqnConfig& cfg,
                             const double* state) {
  QCache c;
  q_forward(w, cfg, state, c);
  return c.q;
}

int greedy_action(const QNetWeights& w, const DqnConfig& cfg, const double* state) {
  return argmax_lowest(q_values(w, cfg, state));
}

int epsilon_greedy_action(const QNetWeights& w, const DqnConfig& cfg, const double* state,
                          double epsilon, Rng& rng) {
  // one uniform draw per call keeps the stream length action-independent
  const double u = rng.uniform();
  const int random_action = rng.uniform_int(0, cfg.n_actions - 1);
  if (u < epsilon) return random_action;
  return greedy_action(w, cfg, state);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
  data_.resize(capacity);
}

void ReplayBuffer::push(const DqnTransition& t) {
  data_[head_] = t;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
  if (batch > size_) throw std::invalid_argument("ReplayBuffer: batch larger than size");
  // partial Fisher-Yates over a scratch index vector
  std::vector<std::size_t> idx(size_);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(
                                  0, static_cast<int>(size_ - 1 - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(batch);
  return idx;
}

double td_update(QNetWeights& online, const QNetWeights& target, const DqnConfig& cfg,
                 const ReplayBuffer& buffer, const std::vector<std::size_t>& batch,
                 nn::Adam& opt) {
  const std::size_t B = batch.size();
  if (B == 0) throw std::invalid_argument("td_update: empty batch");

  constexpr std::size_t kBlock = 16;
  const std::size_t nb = block_count(B, kBlock);
  static thread_local std::vector<QNetWeights> block_grads;
  if (block_grads.size() < nb || block_grads[0].l1.out_dim() != cfg.hidden ||
      block_grads[0].l3.out_dim() != cfg.n_actions)
    block_grads.assign(nb, QNetWeights(cfg));
  std::vector<double> block_loss(nb, 0.0);

  parallel_blocks(B, kBlock, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    QNetWeights& g = block_grads[b];
    g.zero();
    for (std::size_t s = lo; s < hi; ++s) {
      const DqnTransition& t = buffer.at(batch[s]);
      QCache c;
      q_forward(online, cfg, t.state.data(), c);
      double y = t.reward;
      if (!t.done) {
        const auto qn = q_values(target, cfg, t.next_state.data());
        y += cfg.gamma * *std::max_element(qn.begin(), qn.end());
      }
      const double err = c.q[static_cast<std::size_t>(t.action)] - y;
      block_loss[b] += err * err;
      std::vector<double> dq(static_cast<std::size_t>(cfg.n_actions), 0.0);
      dq[static_cast<std::size_t>(t.action)] = 2.0 * err / static_cast<double>(B);
      q_backward(online, t.state.data(), c, dq.data(), g);
    }
  });

  QNetWeights grads(cfg);
  grads.zero();
  double loss = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    auto gs = nn::named_tensors(grads);
    auto bs = nn::named_tensors(block_grads[b]);
    for (std::size_t k = 0; k < gs.size(); ++k) gs[k].tensor->add(*bs[k].tensor);
    loss += block_loss[b];
  }
  opt.step(online, grads, cfg.lr);
  return loss / static_cast<double>(B);
}

SurrogateEnv::SurrogateEnv(const WorldModelWeights* wm, const WorldModelConfig* wm_cfg,
                           EnvConfig env_cfg)
    : wm_(wm), wm_cfg_(wm_cfg), env_cfg_(env_cfg) {}

void SurrogateEnv::reset(const std::vector<Personality>& benign_personalities, Rng& rng) {
  if (static_cast<int>(benign_personalities.size()) != env_cfg_.n_benign)
    throw std::invalid_argument("SurrogateEnv: personality count mismatch");
  personalities_ = benign_personalities;
  positions_.resize(benign_personalities.size());
  for (int& p : positions_) p = rng.uniform_int(0, env_cfg_.max_position);
  prev_action_ = rng.uniform_int(0, env_cfg_.max_position);
  round_ = 0;
  done_ = disagreement(positions_) <= env_cfg_.consensus_tolerance;
}

double SurrogateEnv::delta() const { return disagreement(positions_); }

double SurrogateEnv::step(int attacker_action) {
  if (done_) throw std::logic_error("SurrogateEnv: step after done");
  if (attacker_action < 0 || attacker_action > env_cfg_.max_position)
    throw std::invalid_argument("SurrogateEnv: action out of range");
  positions_ = wm_surrogate_step(*wm_, *wm_cfg_, positions_, personalities_,
                                 attacker_action);
  prev_action_ = attacker_action;
  ++round_;
  RoundRecord rec;
  rec.delta = disagreement(positions_);
  rec.consensus = rec.delta <= env_cfg_.consensus_tolerance;
  if (rec.consensus || round_ >= env_cfg_.max_rounds) done_ = true;
  return attacker_reward(rec, RewardConfig{});
}

std::array<double, kAttackStateDim> SurrogateEnv::state() const {
  return attack_state(positions_, personalities_, prev_action_, round_, env_cfg_);
}

namespace {

const Personality kBenignTypes[3] = {Personality::Stubborn, Personality::Suggestible,
                                     Personality::Neutral};

std::vector<Personality> random_composition(int n, Rng& rng) {
  std::vector<Personality> out;
  for (int i = 0; i < n; ++i)
    out.push_back(kBenignTypes[rng.uniform_int(0, 2)]);
  return out;
}

}  // namespace

std::pair<double, double> surrogate_eval(const QNetWeights& q, const DqnConfig& cfg,
                                         const WorldModelWeights& wm,
                                         const WorldModelConfig& wm_cfg,
                                         const EnvConfig& env_cfg, int episodes,
                                         std::uint64_t seed) {
  std::vector<double> returns(static_cast<std::size_t>(episodes));
  std::vector<int> consensus(static_cast<std::size_t>(episodes));
  parallel_for(static_cast<std::size_t>(episodes), [&](std::size_t e) {
    Rng rng(mix_seed({seed, 0x5e7aULL, static_cast<std::uint64_t>(e)}));
    SurrogateEnv env(&wm, &wm_cfg, env_cfg);
    env.reset(random_composition(env_cfg.n_benign, rng), rng);
    double ret = 0.0;
    while (!env.done()) {
      const auto s = env.state();
      ret += env.step(greedy_action(q, cfg, s.data()));
    }
    returns[e] = ret;
    consensus[e] = env.delta() <= env_cfg.consensus_tolerance ? 1 : 0;
  });
  double mean_ret = 0.0;
  int cr = 0;
  for (std::size_t e = 0; e < returns.size(); ++e) {
    mean_ret += returns[e];
    cr += consensus[e];
  }
  return {mean_ret / episodes, static_cast<double>(cr) / episodes};
}

DqnTrainResult train_attacker(const WorldModelWeights& wm, const WorldModelConfig& wm_cfg,
                              const EnvConfig& env_cfg, const DqnConfig& cfg,
                              std::uint64_t seed) {
  cfg.validate();
  Rng rng(mix_seed({seed, 0xd92fULL}));
  QNetWeights online(cfg);
  online.init(rng);
  QNetWeights target = online;
  nn::Adam opt(online, nn::AdamConfig{});
  ReplayBuffer buffer(cfg.buffer_capacity);
  nn::LinearSchedule eps{cfg.eps_start, cfg.eps_end, cfg.eps_fraction, cfg.total_steps};

  std::vector<SurrogateEnv> envs;
  std::vector<Rng> env_rngs;
  for (int e = 0; e < cfg.n_envs; ++e) {
    envs.emplace_back(&wm, &wm_cfg, env_cfg);
    env_rngs.push_back(rng.fork(static_cast<std::uint64_t>(e) + 1));
    envs.back().reset(random_composition(env_cfg.n_benign, env_rngs.back()),
                      env_rngs.back());
    while (envs.back().done())
      envs.back().reset(random_composition(env_cfg.n_benign, env_rngs.back()),
                        env_rngs.back());
  }

  DqnTrainResult result;
  result.best = online;
  double best_cr = std::numeric_limits<double>::infinity();
  std::int64_t step = 0, updates = 0, next_eval = cfg.eval_interval;

  while (step < cfg.total_steps) {
    for (int e = 0; e < cfg.n_envs; ++e) {
      SurrogateEnv& env = envs[static_cast<std::size_t>(e)];
      Rng& erng = env_rngs[static_cast<std::size_t>(e)];
      const auto s = env.state();
      const int a =
          epsilon_greedy_action(online, cfg, s.data(), eps.value(step), erng);
      const double r = env.step(a);
      DqnTransition t;
      t.state = s;
      t.action = a;
      t.reward = r;
      t.next_state = env.state();
      t.done = env.done();
      buffer.push(t);
      ++step;
      if (env.done()) {
        env.reset(random_composition(env_cfg.n_benign, erng), erng);
        while (env.done())
          env.reset(random_composition(env_cfg.n_benign, erng), erng);
      }
    }

    if (buffer.size() >= cfg.learning_starts) {
      const auto batch =
          buffer.sample_indices(static_cast<std::size_t>(cfg.batch_size), rng);
      td_update(online, target, cfg, buffer, batch, opt);
      ++updates;
      if (updates % cfg.target_update_interval == 0) target = online;
    }

    if (step >= next_eval || step >= cfg.total_steps) {
      const auto [mean_ret, cr] = surrogate_eval(online, cfg, wm, wm_cfg, env_cfg,
                                                 cfg.eval_episodes,
                                                 mix_seed({seed, 0xe7a1ULL}));
      result.curve.push_back({step, eps.value(step), mean_ret, cr});
      if (cr < best_cr) {
        best_cr = cr;
        result.best = online;
        result.best_step = step;
      }
      while (next_eval <= step) next_eval += cfg.eval_interval;
    }
  }
  result.final = online;
  if (result.best_step < 0) result.best = online;
  return result;
}

void write_dqn_curve_csv(const std::string& path,
                         const std::vector<DqnCurvePoint>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write curve csv: " + path);
  out << "step,epsilon,mean_return,surrogate_consensus_rate\n";
  char buf[160];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%lld,%.6f,%.6f,%.6f\n",
                  static_cast<long long>(p.step), p.epsilon, p.mean_return,
                  p.surrogate_consensus_rate);
    out << buf;
  }
}

RlAttackerBackend::RlAttackerBackend(const QNetWeights* q, const DqnConfig* cfg,
                                     std::vector<Personality> benign_attributes)
    : q_(q), cfg_(cfg), attributes_(std::move(benign_attributes)) {}

void RlAttackerBackend::begin_episode() {
  prev_action_ = 0;
  has_prev_ = false;
}

AgentAction RlAttackerBackend::act(const AgentObservation& obs, Rng& rng) {
  std::vector<int> benign_positions;
  for (std::size_t i = 0; i < obs.other_positions.size(); ++i)
    if (obs.other_personalities[i] != Personality::Malicious)
      benign_positions.push_back(obs.other_positions[i]);
  if (!has_prev_) {
    // round 1: the placement position stands in for the previous action
    prev_action_ = obs.own_position;
    has_prev_ = true;
  }
  const auto s = attack_state(benign_positions, attributes_, prev_action_, obs.round - 1,
                              *obs.config);
  const int a = greedy_action(*q_, *cfg_, s.data());
  prev_action_ = a;
  AgentAction act;
  act.position = a;
  act.message_tokens = render_message(Personality::Malicious, a, rng);
  return act;
}

namespace {
json dqn_cfg_to_json(const DqnConfig& c) {
  return json{{"n_actions", c.n_actions},
              {"hidden", c.hidden},
              {"gamma", c.gamma},
              {"lr", c.lr},
              {"buffer_capacity", c.buffer_capacity},
              {"learning_starts", c.learning_starts},
              {"target_update_interval", c.target_update_interval},
              {"batch_size", c.batch_size},
              {"n_envs", c.n_envs},
              {"eps_start", c.eps_start},
              {"eps_end", c.eps_end},
              {"eps_fraction", c.eps_fraction},
              {"total_steps", c.total_steps},
              {"eval_interval", c.eval_interval},
              {"eval_episodes", c.eval_episodes}};
}
DqnConfig dqn_cfg_from_json(const json& j) {
  DqnConfig c;
  c.n_actions = j.at("n_actions").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.gamma = j.at("gamma").get<double>();
  c.lr = j.at("lr").get<double>();
  c.buffer_capacity = j.at("buffer_capacity").get<std::size_t>();
  c.learning_starts = j.at("learning_starts").get<std::size_t>();
  c.target_update_interval = j.at("target_update_interval").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.n_envs = j.at("n_envs").get<int>();
  c.eps_start = j.at("eps_start").get<double>();
  c.eps_end = j.at("eps_end").get<double>();
  c.eps_fraction = j.at("eps_fraction").get<double>();
  c.total_steps = j.at("total_steps").get<std::int64_t>();
  c.eval_interval = j.at("eval_interval").get<std::int64_t>();
  c.eval_episodes = j.at("eval_episodes").get<int>();
  return c;
}
}  // namespace

void save_dqn_checkpoint(const std::string& path, const DqnConfig& cfg, QNetWeights& w) {
  save_checkpoint(path, "dqn", dqn_cfg_to_json(cfg), w);
}

DqnConfig load_dqn_checkpoint(const std::string& path, QNetWeights& w) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  json doc = json::parse(in);
  DqnConfig cfg = dqn_cfg_from_json(doc.at("hyperparameters"));
  w = QNetWeights(cfg);
  load_checkpoint(path, "dqn", w);
  return cfg;
}

}  // namespace macs
