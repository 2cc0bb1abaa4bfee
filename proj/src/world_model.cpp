#include "macs/world_model.hpp"

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

namespace macs {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

void WorldModelConfig::validate() const {
  if (embedding_dim <= 0 || hidden_dim <= 0 || epochs <= 0 || batch_size <= 0 ||
      n_agents <= 1 || max_position < 1)
    throw std::invalid_argument("WorldModelConfig: non-positive field");
  if (val_split <= 0.0 || val_split >= 1.0)
    throw std::invalid_argument("WorldModelConfig: val_split must be in (0,1)");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("WorldModelConfig: dropout must be in [0,1)");
  if (lr_start <= 0.0 || lr_end <= 0.0 || weight_decay < 0.0)
    throw std::invalid_argument("WorldModelConfig: bad optimizer settings");
}

WorldModelWeights::WorldModelWeights(const WorldModelConfig& cfg)
    : pos1(cfg.n_agents, cfg.hidden_dim),
      pos2(cfg.hidden_dim, cfg.hidden_dim),
      type_emb(4, cfg.embedding_dim),
      type1(cfg.n_agents * cfg.embedding_dim, cfg.hidden_dim),
      type2(cfg.hidden_dim, cfg.hidden_dim) {
  for (int k = 0; k < 3; ++k) {
    head1[k] = nn::DenseParams(2 * cfg.hidden_dim, cfg.hidden_dim);
    head2[k] = nn::DenseParams(cfg.hidden_dim, 1);
  }
}

void WorldModelWeights::init(Rng& rng) {
  pos1.init(rng);
  pos2.init(rng);
  type_emb.init(rng);
  type1.init(rng);
  type2.init(rng);
  for (int k = 0; k < 3; ++k) {
    head1[k].init(rng);
    head2[k].init(rng);
  }
}

void WorldModelWeights::zero() {
  pos1.zero();
  pos2.zero();
  type_emb.zero();
  type1.zero();
  type2.zero();
  for (int k = 0; k < 3; ++k) {
    head1[k].zero();
    head2[k].zero();
  }
}

std::string WmTransition::to_json_line() const {
  ojson j;
  j["target_agent_id"] = target_agent_id;
  j["positions"] = positions;
  ojson types = ojson::array();
  for (Personality p : personalities) types.push_back(personality_name(p));
  j["personalities"] = std::move(types);
  j["attacker_position"] = attacker_position;
  j["label"] = label;
  return j.dump();
}

WmTransition WmTransition::from_json_line(const std::string& line) {
  json j = json::parse(line);
  WmTransition t;
  t.target_agent_id = j.at("target_agent_id").get<int>();
  t.positions = j.at("positions").get<std::vector<int>>();
  for (const auto& name : j.at("personalities"))
    t.personalities.push_back(personality_from_name(name.get<std::string>()));
  t.attacker_position = j.at("attacker_position").get<int>();
  t.label = j.at("label").get<int>();
  return t;
}

WmTransition make_wm_input(const std::vector<int>& positions,
                           const std::vector<Personality>& personalities,
                           int target_index, int attacker_position) {
  if (positions.size() != personalities.size())
    throw std::invalid_argument("make_wm_input: size mismatch");
  const std::size_t n = positions.size();
  WmTransition t;
  t.target_agent_id = target_index;
  t.attacker_position = attacker_position;
  t.positions.push_back(positions[static_cast<std::size_t>(target_index)]);
  t.personalities.push_back(personalities[static_cast<std::size_t>(target_index)]);
  std::vector<std::size_t> tail;
  for (std::size_t i = 0; i < n; ++i)
    if (static_cast<int>(i) != target_index) tail.push_back(i);
  std::sort(tail.begin(), tail.end(), [&](std::size_t a, std::size_t b) {
    const int pa = personality_id(personalities[a]);
    const int pb = personality_id(personalities[b]);
    if (pa != pb) return pa < pb;
    return positions[a] < positions[b];
  });
  for (std::size_t i : tail) {
    t.positions.push_back(positions[i]);
    t.personalities.push_back(personalities[i]);
  }
  return t;
}

std::vector<WmTransition> build_wm_dataset(const std::vector<Trajectory>& trajectories) {
  std::vector<WmTransition> out;
  for (const Trajectory& traj : trajectories) {
    if (traj.rounds.size() < 2) continue;
    for (std::size_t r = 0; r + 1 < traj.rounds.size(); ++r) {
      const RoundRecord& cur = traj.rounds[r];
      const RoundRecord& nxt = traj.rounds[r + 1];
      std::vector<int> positions;
      std::vector<Personality> personalities;
      int attacker_position = 0;
      for (const AgentRecord& a : cur.agents) {
        positions.push_back(a.position);
        personalities.push_back(a.personality);
        if (a.personality == Personality::Malicious) attacker_position = a.position;
      }
      for (std::size_t i = 0; i < cur.agents.size(); ++i) {
        if (cur.agents[i].personality == Personality::Malicious) continue;
        WmTransition t = make_wm_input(positions, personalities, static_cast<int>(i),
                                       attacker_position);
        t.target_agent_id = cur.agents[i].id;
        t.label = nxt.agents[i].position;
        out.push_back(std::move(t));
      }
    }
  }
  return out;
}

namespace {

struct WmCache {
  std::vector<double> x, pre_p1, h_p1, pre_p2, h_p2;
  std::vector<double> emb, pre_t1, h_t1, pre_t2, h_t2;
  std::vector<double> z, pre_h1, h_h1;
  double pre_out = 0.0;
  nn::DropoutMask drop_z, drop_h;
  int head = 0;
};

int head_index(Personality p) {
  switch (p) {
    case Personality::Stubborn: return 0;
    case Personality::Suggestible: return 1;
    case Personality::Neutral: return 2;
    case Personality::Malicious:
      throw std::invalid_argument("world model: no prediction head for a malicious target");
  }
  return 0;
}

double wm_forward(const WorldModelWeights& w, const WorldModelConfig& cfg,
                  const WmTransition& in, bool training, Rng* drop_rng, WmCache* cache) {
  if (static_cast<int>(in.positions.size()) != cfg.n_agents)
    throw std::invalid_argument("world model: expected " + std::to_string(cfg.n_agents) +
                                " positions, got " + std::to_string(in.positions.size()));
  const int H = cfg.hidden_dim;
  const int E = cfg.embedding_dim;
  const int A = cfg.n_agents;
  WmCache local;
  WmCache& c = cache ? *cache : local;
  c.head = head_index(in.personalities[0]);

  c.x.resize(static_cast<std::size_t>(A));
  for (int i = 0; i < A; ++i)
    c.x[static_cast<std::size_t>(i)] =
        static_cast<double>(in.positions[static_cast<std::size_t>(i)]) / cfg.max_position;

  c.pre_p1.resize(static_cast<std::size_t>(H));
  c.h_p1.resize(static_cast<std::size_t>(H));
  c.pre_p2.resize(static_cast<std::size_t>(H));
  c.h_p2.resize(static_cast<std::size_t>(H));
  nn::dense_forward(w.pos1, nn::Activation::ReLU, c.x.data(), c.pre_p1.data(), c.h_p1.data());
  nn::dense_forward(w.pos2, nn::Activation::ReLU, c.h_p1.data(), c.pre_p2.data(),
                    c.h_p2.data());

  c.emb.resize(static_cast<std::size_t>(A * E));
  for (int i = 0; i < A; ++i)
    nn::embedding_forward(w.type_emb, personality_id(in.personalities[static_cast<std::size_t>(i)]),
                          c.emb.data() + static_cast<std::size_t>(i) * E);
  c.pre_t1.resize(static_cast<std::size_t>(H));
  c.h_t1.resize(static_cast<std::size_t>(H));
  c.pre_t2.resize(static_cast<std::size_t>(H));
  c.h_t2.resize(static_cast<std::size_t>(H));
  nn::dense_forward(w.type1, nn::Activation::ReLU, c.emb.data(), c.pre_t1.data(),
                    c.h_t1.data());
  nn::dense_forward(w.type2, nn::Activation::ReLU, c.h_t1.data(), c.pre_t2.data(),
                    c.h_t2.data());

  c.z.resize(static_cast<std::size_t>(2 * H));
  std::copy(c.h_p2.begin(), c.h_p2.end(), c.z.begin());
  std::copy(c.h_t2.begin(), c.h_t2.end(), c.z.begin() + H);
  if (training && drop_rng)
    nn::dropout_forward(cfg.dropout, true, *drop_rng, c.z.data(), 2 * H, &c.drop_z);

  c.pre_h1.resize(static_cast<std::size_t>(H));
  c.h_h1.resize(static_cast<std::size_t>(H));
  nn::dense_forward(w.head1[c.head], nn::Activation::ReLU, c.z.data(), c.pre_h1.data(),
                    c.h_h1.data());
  if (training && drop_rng)
    nn::dropout_forward(cfg.dropout, true, *drop_rng, c.h_h1.data(), H, &c.drop_h);

  double out = 0.0;
  nn::dense_forward(w.head2[c.head], nn::Activation::Identity, c.h_h1.data(), &c.pre_out,
                    &out);
  return out;
}

void wm_backward(const WorldModelWeights& w, const WorldModelConfig& cfg,
                 const WmTransition& in, const WmCache& c, double dout, bool training,
                 WorldModelWeights& g) {
  const int H = cfg.hidden_dim;
  const int E = cfg.embedding_dim;
  const int A = cfg.n_agents;

  std::vector<double> dh_h1(static_cast<std::size_t>(H), 0.0);
  double dpre_out;
  nn::dense_backward(w.head2[c.head], nn::Activation::Identity, c.h_h1.data(), &c.pre_out,
                     &dout, &dpre_out, dh_h1.data(), g.head2[c.head]);
  if (training) nn::dropout_backward(c.drop_h, dh_h1.data(), H);

  std::vector<double> dz(static_cast<std::size_t>(2 * H), 0.0);
  std::vector<double> dpre_h1(static_cast<std::size_t>(H));
  nn::dense_backward(w.head1[c.head], nn::Activation::ReLU, c.z.data(), c.pre_h1.data(),
                     dh_h1.data(), dpre_h1.data(), dz.data(), g.head1[c.head]);
  if (training) nn::dropout_backward(c.drop_z, dz.data(), 2 * H);

  std::vector<double> dh_p1(static_cast<std::size_t>(H), 0.0);
  std::vector<double> dpre(static_cast<std::size_t>(H));
  nn::dense_backward(w.pos2, nn::Activation::ReLU, c.h_p1.data(), c.pre_p2.data(), dz.data(),
                     dpre.data(), dh_p1.data(), g.pos2);
  std::vector<double> dpre1(static_cast<std::size_t>(H));
  nn::dense_backward(w.pos1, nn::Activation::ReLU, c.x.data(), c.pre_p1.data(), dh_p1.data(),
                     dpre1.data(), nullptr, g.pos1);

  std::vector<double> dh_t1(static_cast<std::size_t>(H), 0.0);
  std::vector<double> demb(static_cast<std::size_t>(A * E), 0.0);
  nn::dense_backward(w.type2, nn::Activation::ReLU, c.h_t1.data(), c.pre_t2.data(),
                     dz.data() + H, dpre.data(), dh_t1.data(), g.type2);
  nn::dense_backward(w.type1, nn::Activation::ReLU, c.emb.data(), c.pre_t1.data(),
                     dh_t1.data(), dpre1.data(), demb.data(), g.type1);
  for (int i = 0; i < A; ++i)
    nn::embedding_backward(g.type_emb,
                           personality_id(in.personalities[static_cast<std::size_t>(i)]),
                           demb.data() + static_cast<std::size_t>(i) * E);
}

}  // namespace

double wm_predict(const WorldModelWeights& w, const WorldModelConfig& cfg,
                  const WmTransition& input) {
  return wm_forward(w, cfg, input, false, nullptr, nullptr);
}

WmEvalReport wm_evaluate(const WorldModelWeights& w, const WorldModelConfig& cfg,
                         const std::vector<WmTransition>& held_out) {
  if (held_out.empty()) throw std::invalid_argument("wm_evaluate: empty held-out set");
  struct Acc {
    double abs_err = 0.0;
    std::size_t hits = 0;
    std::size_t n = 0;
  };
  Acc per[3], overall;
  std::vector<double> preds(held_out.size());
  parallel_for(held_out.size(), [&](std::size_t i) {
    preds[i] = wm_predict(w, cfg, held_out[i]);
  });
  for (std::size_t i = 0; i < held_out.size(); ++i) {
    const WmTransition& t = held_out[i];
    const int k = head_index(t.personalities[0]);
    const double err = std::fabs(preds[i] - t.label);
    const bool hit = static_cast<int>(std::lround(preds[i])) == t.label;
    per[k].abs_err += err;
    per[k].hits += hit ? 1 : 0;
    per[k].n += 1;
    overall.abs_err += err;
    overall.hits += hit ? 1 : 0;
    overall.n += 1;
  }
  WmEvalReport rep;
  const char* names[3] = {"stubborn", "suggestible", "neutral"};
  for (int k = 0; k < 3; ++k) {
    WmEvalRow row;
    row.personality = names[k];
    row.n = per[k].n;
    if (per[k].n > 0) {
      row.mae = per[k].abs_err / static_cast<double>(per[k].n);
      row.accuracy = static_cast<double>(per[k].hits) / static_cast<double>(per[k].n);
    }
    rep.per_personality.push_back(std::move(row));
  }
  rep.overall.personality = "overall";
  rep.overall.n = overall.n;
  rep.overall.mae = overall.abs_err / static_cast<double>(overall.n);
  rep.overall.accuracy = static_cast<double>(overall.hits) / static_cast<double>(overall.n);
  return rep;
}

void write_wm_eval_csv(const std::string& path, const WmEvalReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write eval csv: " + path);
  out << "personality,mae,accuracy,n\n";
  char buf[160];
  for (const WmEvalRow* row : {&report.per_personality[0], &report.per_personality[1],
                               &report.per_personality[2], &report.overall}) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%zu\n", row->personality.c_str(), row->mae,
                  row->accuracy, row->n);
    out << buf;
  }
}

double persistence_baseline_mae(const std::vector<WmTransition>& data) {
  if (data.empty()) throw std::invalid_argument("persistence baseline: empty set");
  double sum = 0.0;
  for (const WmTransition& t : data)
    sum += std::fabs(static_cast<double>(t.positions[0]) - t.label);
  return sum / static_cast<double>(data.size());
}

double global_mean_baseline_mae(const std::vector<WmTransition>& train,
                                const std::vector<WmTransition>& held_out) {
  if (train.empty() || held_out.empty())
    throw std::invalid_argument("global-mean baseline: empty set");
  double mean = 0.0;
  for (const WmTransition& t : train) mean += t.label;
  mean /= static_cast<double>(train.size());
  double sum = 0.0;
  for (const WmTransition& t : held_out) sum += std::fabs(mean - t.label);
  return sum / static_cast<double>(held_out.size());
}

WmTrainResult wm_train(const std::vector<WmTransition>& dataset,
                       const WorldModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (static_cast<int>(dataset.size()) < 10 * cfg.batch_size)
    throw std::invalid_argument("wm_train: dataset smaller than 10 batches");

  Rng rng(mix_seed({seed, 0x77d1ULL}));
  WorldModelWeights weights(cfg);
  weights.init(rng);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)))]);
  const std::size_t n_val =
      std::max<std::size_t>(1, static_cast<std::size_t>(cfg.val_split * dataset.size()));
  std::vector<WmTransition> train, val;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < order.size() - n_val)
      train.push_back(dataset[order[i]]);
    else
      val.push_back(dataset[order[i]]);
  }

  nn::AdamConfig acfg;
  acfg.weight_decay = cfg.weight_decay;
  nn::Adam opt(weights, acfg);

  const std::size_t steps_per_epoch =
      (train.size() + cfg.batch_size - 1) / static_cast<std::size_t>(cfg.batch_size);
  nn::LinearSchedule lr{cfg.lr_start, cfg.lr_end, 1.0,
                        static_cast<std::int64_t>(steps_per_epoch) * cfg.epochs};

  constexpr std::size_t kBlock = 16;
  const std::size_t max_blocks = block_count(static_cast<std::size_t>(cfg.batch_size), kBlock);
  std::vector<WorldModelWeights> block_grads;
  for (std::size_t b = 0; b < max_blocks; ++b) block_grads.emplace_back(cfg);
  WorldModelWeights grads(cfg);

  WmTrainResult result;
  result.best = weights;
  result.val_set = val;
  double best_val = std::numeric_limits<double>::infinity();
  std::int64_t step = 0;

  auto eval_loss = [&](const std::vector<WmTransition>& set) {
    std::vector<double> losses(set.size());
    parallel_for(set.size(), [&](std::size_t i) {
      const double pred = wm_predict(weights, cfg, set[i]);
      const double e = pred - set[i].label;
      losses[i] = cfg.target_weight(set[i].personalities[0]) * e * e;
    });
    double sum = 0.0;
    for (double l : losses) sum += l;
    return sum / static_cast<double>(set.size());
  };

  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = idx.size() - 1; i > 0; --i)
      std::swap(idx[i], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)))]);

    double epoch_loss = 0.0;
    std::size_t epoch_samples = 0;
    for (std::size_t start = 0; start < train.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(train.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t bsz = end - start;
      const std::size_t nb = block_count(bsz, kBlock);
      std::vector<double> block_loss(nb, 0.0);
      parallel_blocks(bsz, kBlock, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        WorldModelWeights& g = block_grads[b];
        g.zero();
        for (std::size_t s = lo; s < hi; ++s) {
          const WmTransition& t = train[idx[start + s]];
          Rng drop_rng(mix_seed({seed, 0xd409ULL, static_cast<std::uint64_t>(epoch),
                                 static_cast<std::uint64_t>(idx[start + s])}));
          WmCache cache;
          const double pred = wm_forward(weights, cfg, t, true, &drop_rng, &cache);
          double label = t.label;
          if (cfg.label_noise_sigma > 0.0) label += drop_rng.normal() * cfg.label_noise_sigma;
          const double wgt = cfg.target_weight(t.personalities[0]);
          const double e = pred - label;
          block_loss[b] += wgt * e * e;
          const double dout = 2.0 * wgt * e / static_cast<double>(bsz);
          wm_backward(weights, cfg, t, cache, dout, true, g);
        }
      });
      grads.zero();
      for (std::size_t b = 0; b < nb; ++b) {
        auto gs = nn::named_tensors(grads);
        auto bs = nn::named_tensors(block_grads[b]);
        for (std::size_t k = 0; k < gs.size(); ++k) gs[k].tensor->add(*bs[k].tensor);
        epoch_loss += block_loss[b];
      }
      epoch_samples += bsz;
      const double batch_loss =
          std::accumulate(block_loss.begin(), block_loss.end(), 0.0) / static_cast<double>(bsz);
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("wm_train: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch starting " +
                                 std::to_string(start));
      opt.step(weights, grads, lr.value(step));
      ++step;
    }

    result.train_loss.push_back(epoch_loss / static_cast<double>(epoch_samples));
    const double vl = eval_loss(val);
    result.val_loss.push_back(vl);
    if (vl < best_val) {
      best_val = vl;
      result.best = weights;
      result.best_epoch = epoch;
    }
  }
  result.final_epoch = weights;
  return result;
}

std::vector<int> wm_surrogate_step(const WorldModelWeights& w, const WorldModelConfig& cfg,
                                   const std::vector<int>& benign_positions,
                                   const std::vector<Personality>& benign_personalities,
                                   int attacker_position) {
  std::vector<int> all = benign_positions;
  all.push_back(attacker_position);
  std::vector<Personality> types = benign_personalities;
  types.push_back(Personality::Malicious);
  std::vector<int> next(benign_positions.size());
  for (std::size_t i = 0; i < benign_positions.size(); ++i) {
    WmTransition in = make_wm_input(all, types, static_cast<int>(i), attacker_position);
    const double pred = wm_predict(w, cfg, in);
    if (!std::isfinite(pred))
      throw std::runtime_error("wm_surrogate_step: non-finite prediction");
    next[i] = std::clamp(static_cast<int>(std::lround(pred)), 0, cfg.max_position);
  }
  return next;
}

namespace {
json wm_cfg_to_json(const WorldModelConfig& c) {
  return json{{"embedding_dim", c.embedding_dim}, {"hidden_dim", c.hidden_dim},
              {"dropout", c.dropout},             {"epochs", c.epochs},
              {"batch_size", c.batch_size},       {"weight_decay", c.weight_decay},
              {"lr_start", c.lr_start},           {"lr_end", c.lr_end},
              {"val_split", c.val_split},         {"suggestible_weight", c.suggestible_weight},
              {"other_weight", c.other_weight},   {"label_noise_sigma", c.label_noise_sigma},
              {"n_agents", c.n_agents},           {"max_position", c.max_position}};
}
WorldModelConfig wm_cfg_from_json(const json& j) {
  WorldModelConfig c;
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.lr_start = j.at("lr_start").get<double>();
  c.lr_end = j.at("lr_end").get<double>();
  c.val_split = j.at("val_split").get<double>();
  c.suggestible_weight = j.at("suggestible_weight").get<double>();
  c.other_weight = j.at("other_weight").get<double>();
  c.label_noise_sigma = j.at("label_noise_sigma").get<double>();
  c.n_agents = j.at("n_agents").get<int>();
  c.max_position = j.at("max_position").get<int>();
  return c;
}
}  // namespace

void save_wm_checkpoint(const std::string& path, const WorldModelConfig& cfg,
                        WorldModelWeights& w) {
  save_checkpoint(path, "world_model", wm_cfg_to_json(cfg), w);
}

WorldModelConfig load_wm_checkpoint(const std::string& path, WorldModelWeights& w) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  json doc = json::parse(in);
  WorldModelConfig cfg = wm_cfg_from_json(doc.at("hyperparameters"));
  w = WorldModelWeights(cfg);
  load_checkpoint(path, "world_model", w);
  return cfg;
}

void write_wm_transitions(const std::string& path, const std::vector<WmTransition>& ts) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write transitions: " + path);
  for (const auto& t : ts) out << t.to_json_line() << "\n";
}

std::vector<WmTransition> read_wm_transitions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read transitions: " + path);
  std::vector<WmTransition> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(WmTransition::from_json_line(line));
  return out;
}

}  // namespace macs
