#include "macs/classifier.hpp"

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

void ClassifierConfig::validate() const {
  if (position_vocab <= 0 || position_emb_dim <= 0 || delta_emb_dim <= 0 ||
      traj_hidden <= 0 || hash_buckets <= 0 || token_emb_dim <= 0 || msg_hidden <= 0 ||
      summary_hidden <= 0 || head_hidden <= 0 || n_classes <= 1 || epochs <= 0 ||
      batch_size <= 0 || patience <= 0 || max_messages <= 0 ||
      max_tokens_per_message <= 0)
    throw std::invalid_argument("ClassifierConfig: non-positive field");
  if (val_split <= 0.0 || val_split >= 1.0)
    throw std::invalid_argument("ClassifierConfig: val_split must be in (0,1)");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("ClassifierConfig: dropout must be in [0,1)");
}

ClassifierWeights::ClassifierWeights(const ClassifierConfig& cfg)
    : pos_emb(cfg.position_vocab, cfg.position_emb_dim),
      delta_emb(7, cfg.delta_emb_dim),
      traj_gru(cfg.position_emb_dim + cfg.delta_emb_dim, cfg.traj_hidden),
      token_emb(cfg.hash_buckets, cfg.token_emb_dim),
      msg_gru(cfg.token_emb_dim, cfg.msg_hidden),
      summary(9, cfg.summary_hidden),
      head1(cfg.traj_hidden + cfg.summary_hidden + cfg.msg_hidden, cfg.head_hidden),
      head2(cfg.head_hidden, cfg.n_classes) {}

void ClassifierWeights::init(Rng& rng) {
  pos_emb.init(rng);
  delta_emb.init(rng);
  traj_gru.init(rng);
  token_emb.init(rng);
  msg_gru.init(rng);
  summary.init(rng);
  head1.init(rng);
  head2.init(rng);
}

void ClassifierWeights::zero() {
  pos_emb.zero();
  delta_emb.zero();
  traj_gru.zero();
  token_emb.zero();
  msg_gru.zero();
  summary.zero();
  head1.zero();
  head2.zero();
}

int delta_bucket(int delta) {
  if (delta <= -3) return 0;
  if (delta >= 3) return 6;
  return delta + 3;
}

int token_bucket(const std::string& token, int buckets) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return static_cast<int>(h % static_cast<std::uint64_t>(buckets));
}

std::array<double, 9> summary_features(const std::vector<int>& positions,
                                       const std::vector<double>& others_mean,
                                       int max_position) {
  if (positions.size() < 2 || others_mean.size() != positions.size())
    throw std::invalid_argument("summary_features: need >= 2 aligned rounds");
  const double L = max_position;
  const std::size_t n = positions.size();
  const std::size_t steps = n - 1;

  double mean_pos = 0.0;
  for (int p : positions) mean_pos += p;
  mean_pos /= static_cast<double>(n);
  double var_pos = 0.0;
  for (int p : positions) var_pos += (p - mean_pos) * (p - mean_pos);
  var_pos /= static_cast<double>(n);

  double mean_abs_step = 0.0, max_abs_step = 0.0;
  std::size_t zero_steps = 0, toward_steps = 0;
  for (std::size_t t = 1; t < n; ++t) {
    const int step = positions[t] - positions[t - 1];
    mean_abs_step += std::abs(step);
    max_abs_step = std::max(max_abs_step, static_cast<double>(std::abs(step)));
    if (step == 0) ++zero_steps;
    const double gap = others_mean[t - 1] - positions[t - 1];
    if (step != 0 && gap != 0.0 && (step > 0) == (gap > 0)) ++toward_steps;
  }
  mean_abs_step /= static_cast<double>(steps);

  double mean_gap = 0.0;
  for (std::size_t t = 0; t < n; ++t) mean_gap += std::fabs(positions[t] - others_mean[t]);
  mean_gap /= static_cast<double>(n);

  return {mean_pos / L,
          std::sqrt(var_pos) / L,
          mean_abs_step / L,
          max_abs_step / L,
          static_cast<double>(zero_steps) / static_cast<double>(steps),
          std::fabs(positions.back() - positions.front()) / L,
          static_cast<double>(toward_steps) / static_cast<double>(steps),
          mean_gap / L,
          std::fabs(positions.back() - others_mean.back()) / L};
}

std::vector<ClfSample> build_clf_dataset(const std::vector<Trajectory>& trajectories,
                                         const ClassifierConfig& cfg) {
  std::vector<ClfSample> out;
  for (const Trajectory& traj : trajectories) {
    if (traj.rounds.size() < 2) continue;
    const std::size_t n_agents = traj.rounds[0].agents.size();
    for (std::size_t i = 0; i < n_agents; ++i) {
      if (traj.rounds[0].agents[i].personality == Personality::Malicious) continue;
      ClfSample s;
      s.label = personality_id(traj.rounds[0].agents[i].personality);
      for (const RoundRecord& rec : traj.rounds) {
        s.positions.push_back(rec.agents[i].position);
        double sum = 0.0;
        for (std::size_t j = 0; j < rec.agents.size(); ++j)
          if (j != i) sum += rec.agents[j].position;
        s.others_mean.push_back(sum / static_cast<double>(rec.agents.size() - 1));
        if (rec.round > 0 &&
            static_cast<int>(s.messages.size()) < cfg.max_messages) {
          std::vector<std::string> toks = rec.agents[i].message_tokens;
          if (static_cast<int>(toks.size()) > cfg.max_tokens_per_message)
            toks.resize(static_cast<std::size_t>(cfg.max_tokens_per_message));
          s.messages.push_back(std::move(toks));
        }
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<double> class_weights(const std::vector<ClfSample>& samples, int n_classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
  for (const ClfSample& s : samples) counts[static_cast<std::size_t>(s.label)] += 1;
  std::vector<double> w(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw std::invalid_argument("class_weights: class " + std::to_string(c) +
                                  " has no samples");
    w[static_cast<std::size_t>(c)] =
        static_cast<double>(samples.size()) /
        (static_cast<double>(n_classes) *
         static_cast<double>(counts[static_cast<std::size_t>(c)]));
  }
  return w;
}

namespace {

struct ClfCache {
  // trajectory branch
  std::vector<std::vector<double>> traj_x;
  std::vector<nn::GruCache> traj_steps;
  std::vector<int> pos_ids, delta_ids;
  // message branch
  std::vector<std::vector<double>> msg_x;
  std::vector<nn::GruCache> msg_steps;
  std::vector<std::vector<int>> msg_token_ids;
  // summary branch
  std::array<double, 9> feat{};
  std::vector<double> sum_pre, sum_h;
  // head
  std::vector<double> z, pre1, h1, pre2, logits;
  nn::DropoutMask drop_z, drop_h;
};

void clf_forward(const ClassifierWeights& w, const ClassifierConfig& cfg,
                 const ClfSample& s, bool training, Rng* drop_rng, ClfCache& c) {
  if (s.positions.size() < 2)
    throw std::invalid_argument("classifier: sample needs at least 2 rounds");
  const int TH = cfg.traj_hidden;
  const int MH = cfg.msg_hidden;
  const int IN = cfg.position_emb_dim + cfg.delta_emb_dim;

  std::vector<double> th(static_cast<std::size_t>(TH), 0.0);
  for (std::size_t t = 1; t < s.positions.size(); ++t) {
    const int pid = std::clamp(s.positions[t], 0, cfg.position_vocab - 1);
    const int did = delta_bucket(s.positions[t] - s.positions[t - 1]);
    c.pos_ids.push_back(pid);
    c.delta_ids.push_back(did);
    std::vector<double> x(static_cast<std::size_t>(IN));
    nn::embedding_forward(w.pos_emb, pid, x.data());
    nn::embedding_forward(w.delta_emb, did, x.data() + cfg.position_emb_dim);
    c.traj_steps.emplace_back();
    std::vector<double> h_next(static_cast<std::size_t>(TH));
    nn::gru_step(w.traj_gru, x.data(), th.data(), h_next.data(), &c.traj_steps.back());
    c.traj_x.push_back(std::move(x));
    th = std::move(h_next);
  }

  std::vector<double> mh(static_cast<std::size_t>(MH), 0.0);
  for (const auto& msg : s.messages) {
    std::vector<int> ids;
    std::vector<double> x(static_cast<std::size_t>(cfg.token_emb_dim), 0.0);
    for (const std::string& tok : msg) {
      const int id = token_bucket(tok, cfg.hash_buckets);
      ids.push_back(id);
      std::vector<double> e(static_cast<std::size_t>(cfg.token_emb_dim));
      nn::embedding_forward(w.token_emb, id, e.data());
      for (int k = 0; k < cfg.token_emb_dim; ++k) x[static_cast<std::size_t>(k)] += e[static_cast<std::size_t>(k)];
    }
    c.msg_token_ids.push_back(std::move(ids));
    c.msg_steps.emplace_back();
    std::vector<double> h_next(static_cast<std::size_t>(MH));
    nn::gru_step(w.msg_gru, x.data(), mh.data(), h_next.data(), &c.msg_steps.back());
    c.msg_x.push_back(std::move(x));
    mh = std::move(h_next);
  }

  c.feat = summary_features(s.positions, s.others_mean, cfg.position_vocab - 1);
  c.sum_pre.resize(static_cast<std::size_t>(cfg.summary_hidden));
  c.sum_h.resize(static_cast<std::size_t>(cfg.summary_hidden));
  nn::dense_forward(w.summary, nn::Activation::ReLU, c.feat.data(), c.sum_pre.data(),
                    c.sum_h.data());

  const int Z = TH + cfg.summary_hidden + MH;
  c.z.resize(static_cast<std::size_t>(Z));
  std::copy(th.begin(), th.end(), c.z.begin());
  std::copy(c.sum_h.begin(), c.sum_h.end(), c.z.begin() + TH);
  std::copy(mh.begin(), mh.end(), c.z.begin() + TH + cfg.summary_hidden);
  if (training && drop_rng)
    nn::dropout_forward(cfg.dropout, true, *drop_rng, c.z.data(), Z, &c.drop_z);

  c.pre1.resize(static_cast<std::size_t>(cfg.head_hidden));
  c.h1.resize(static_cast<std::size_t>(cfg.head_hidden));
  nn::dense_forward(w.head1, nn::Activation::ReLU, c.z.data(), c.pre1.data(), c.h1.data());
  if (training && drop_rng)
    nn::dropout_forward(cfg.dropout, true, *drop_rng, c.h1.data(), cfg.head_hidden,
                        &c.drop_h);

  c.pre2.resize(static_cast<std::size_t>(cfg.n_classes));
  c.logits.resize(static_cast<std::size_t>(cfg.n_classes));
  nn::dense_forward(w.head2, nn::Activation::Identity, c.h1.data(), c.pre2.data(),
                    c.logits.data());
}

void clf_backward(const ClassifierWeights& w, const ClassifierConfig& cfg,
                  const ClfCache& c, const double* dlogits, bool training,
                  ClassifierWeights& g) {
  const int TH = cfg.traj_hidden;
  const int MH = cfg.msg_hidden;
  const int Z = TH + cfg.summary_hidden + MH;

  std::vector<double> dh1(static_cast<std::size_t>(cfg.head_hidden), 0.0);
  std::vector<double> dpre2(static_cast<std::size_t>(cfg.n_classes));
  nn::dense_backward(w.head2, nn::Activation::Identity, c.h1.data(), c.pre2.data(), dlogits,
                     dpre2.data(), dh1.data(), g.head2);
  if (training) nn::dropout_backward(c.drop_h, dh1.data(), cfg.head_hidden);

  std::vector<double> dz(static_cast<std::size_t>(Z), 0.0);
  std::vector<double> dpre1(static_cast<std::size_t>(cfg.head_hidden));
  nn::dense_backward(w.head1, nn::Activation::ReLU, c.z.data(), c.pre1.data(), dh1.data(),
                     dpre1.data(), dz.data(), g.head1);
  if (training) nn::dropout_backward(c.drop_z, dz.data(), Z);

  // summary branch
  std::vector<double> dfeat(9, 0.0);
  std::vector<double> dsum_pre(static_cast<std::size_t>(cfg.summary_hidden));
  nn::dense_backward(w.summary, nn::Activation::ReLU, c.feat.data(), c.sum_pre.data(),
                     dz.data() + TH, dsum_pre.data(), nullptr, g.summary);

  // trajectory gru, backward through time
  std::vector<double> dh(dz.begin(), dz.begin() + TH);
  for (std::size_t t = c.traj_steps.size(); t-- > 0;) {
    std::vector<double> dh_prev(static_cast<std::size_t>(TH), 0.0);
    std::vector<double> dx(c.traj_x[t].size(), 0.0);
    nn::gru_backward(w.traj_gru, c.traj_steps[t], dh.data(), dx.data(), dh_prev.data(),
                     g.traj_gru);
    nn::embedding_backward(g.pos_emb, c.pos_ids[t], dx.data());
    nn::embedding_backward(g.delta_emb, c.delta_ids[t], dx.data() + cfg.position_emb_dim);
    dh = std::move(dh_prev);
  }

  // message gru
  std::vector<double> dmh(dz.begin() + TH + cfg.summary_hidden, dz.end());
  for (std::size_t t = c.msg_steps.size(); t-- > 0;) {
    std::vector<double> dh_prev(static_cast<std::size_t>(MH), 0.0);
    std::vector<double> dx(c.msg_x[t].size(), 0.0);
    nn::gru_backward(w.msg_gru, c.msg_steps[t], dmh.data(), dx.data(), dh_prev.data(),
                     g.msg_gru);
    for (int id : c.msg_token_ids[t]) nn::embedding_backward(g.token_emb, id, dx.data());
    dmh = std::move(dh_prev);
  }
}

}  // namespace

std::vector<double> clf_forward_logits(const ClassifierWeights& w,
                                       const ClassifierConfig& cfg, const ClfSample& s) {
  ClfCache c;
  clf_forward(w, cfg, s, false, nullptr, c);
  return c.logits;
}

int clf_predict(const ClassifierWeights& w, const ClassifierConfig& cfg,
                const ClfSample& s) {
  auto logits = clf_forward_logits(w, cfg, s);
  return static_cast<int>(
      std::max_element(logits.begin(), logits.end()) - logits.begin());
}

ClfTrainResult clf_train(const std::vector<ClfSample>& dataset,
                         const ClassifierConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (dataset.size() < 30)
    throw std::invalid_argument("clf_train: dataset too small");

  Rng rng(mix_seed({seed, 0xc1a55ULL}));
  ClassifierWeights weights(cfg);
  weights.init(rng);

  // stratified split
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(cfg.n_classes));
  for (std::size_t i = 0; i < dataset.size(); ++i)
    by_class[static_cast<std::size_t>(dataset[i].label)].push_back(i);
  std::vector<std::size_t> train_idx, val_idx;
  for (auto& group : by_class) {
    if (group.empty()) throw std::invalid_argument("clf_train: empty class");
    for (std::size_t i = group.size() - 1; i > 0; --i)
      std::swap(group[i], group[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)))]);
    const std::size_t n_val =
        std::max<std::size_t>(1, static_cast<std::size_t>(cfg.val_split * group.size()));
    for (std::size_t i = 0; i < group.size(); ++i)
      (i < n_val ? val_idx : train_idx).push_back(group[i]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  std::vector<ClfSample> train, val;
  for (std::size_t i : train_idx) train.push_back(dataset[i]);
  for (std::size_t i : val_idx) val.push_back(dataset[i]);
  const std::vector<double> alpha = class_weights(train, cfg.n_classes);

  nn::AdamConfig acfg;
  acfg.weight_decay = cfg.weight_decay;
  nn::Adam opt(weights, acfg);
  const std::size_t steps_per_epoch =
      (train.size() + cfg.batch_size - 1) / static_cast<std::size_t>(cfg.batch_size);
  nn::LinearSchedule lr{cfg.lr_start, cfg.lr_end, 1.0,
                        static_cast<std::int64_t>(steps_per_epoch) * cfg.epochs};

  constexpr std::size_t kBlock = 4;
  std::vector<ClassifierWeights> block_grads;
  for (std::size_t b = 0; b < block_count(static_cast<std::size_t>(cfg.batch_size), kBlock);
       ++b)
    block_grads.emplace_back(cfg);
  ClassifierWeights grads(cfg);

  ClfTrainResult result;
  result.best = weights;
  result.val_set = val;
  double best_acc = -1.0, best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::int64_t step = 0;

  auto val_metrics = [&](double* loss_out) {
    std::vector<double> losses(val.size());
    std::vector<int> hits(val.size());
    parallel_for(val.size(), [&](std::size_t i) {
      ClfCache c;
      clf_forward(weights, cfg, val[i], false, nullptr, c);
      losses[i] = nn::weighted_cross_entropy(c.logits.data(), cfg.n_classes, val[i].label,
                                             alpha.data(), nullptr);
      const int pred = static_cast<int>(
          std::max_element(c.logits.begin(), c.logits.end()) - c.logits.begin());
      hits[i] = pred == val[i].label ? 1 : 0;
    });
    double loss = 0.0;
    int hit = 0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      loss += losses[i];
      hit += hits[i];
    }
    *loss_out = loss / static_cast<double>(val.size());
    return static_cast<double>(hit) / static_cast<double>(val.size());
  };

  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = idx.size() - 1; i > 0; --i)
      std::swap(idx[i], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)))]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(train.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t bsz = end - start;
      const std::size_t nb = block_count(bsz, kBlock);
      std::vector<double> block_loss(nb, 0.0);
      parallel_blocks(bsz, kBlock, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        ClassifierWeights& g = block_grads[b];
        g.zero();
        for (std::size_t s = lo; s < hi; ++s) {
          const ClfSample& sample = train[idx[start + s]];
          Rng drop_rng(mix_seed({seed, 0xdc1fULL, static_cast<std::uint64_t>(epoch),
                                 static_cast<std::uint64_t>(idx[start + s])}));
          ClfCache c;
          clf_forward(weights, cfg, sample, true, &drop_rng, c);
          std::vector<double> dlogits(static_cast<std::size_t>(cfg.n_classes));
          const double loss = nn::weighted_cross_entropy(
              c.logits.data(), cfg.n_classes, sample.label, alpha.data(), dlogits.data());
          block_loss[b] += loss;
          for (double& d : dlogits) d /= static_cast<double>(bsz);
          clf_backward(weights, cfg, c, dlogits.data(), true, g);
        }
      });
      grads.zero();
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        auto gs = nn::named_tensors(grads);
        auto bs = nn::named_tensors(block_grads[b]);
        for (std::size_t k = 0; k < gs.size(); ++k) gs[k].tensor->add(*bs[k].tensor);
        batch_loss += block_loss[b];
      }
      epoch_loss += batch_loss;
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("clf_train: non-finite loss at epoch " +
                                 std::to_string(epoch));
      opt.step(weights, grads, lr.value(step));
      ++step;
    }

    result.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));
    double vl = 0.0;
    const double acc = val_metrics(&vl);
    result.val_loss.push_back(vl);
    result.val_accuracy.push_back(acc);
    if (acc > best_acc || (acc == best_acc && vl < best_loss)) {
      best_acc = acc;
      best_loss = vl;
      result.best = weights;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

ClfEvalReport clf_evaluate(const ClassifierWeights& w, const ClassifierConfig& cfg,
                           const std::vector<ClfSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("clf_evaluate: empty set");
  ClfEvalReport rep;
  rep.confusion.assign(static_cast<std::size_t>(cfg.n_classes),
                       std::vector<std::size_t>(static_cast<std::size_t>(cfg.n_classes), 0));
  std::vector<int> preds(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    preds[i] = clf_predict(w, cfg, samples[i]);
  });
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    rep.confusion[static_cast<std::size_t>(samples[i].label)]
                 [static_cast<std::size_t>(preds[i])] += 1;
    if (preds[i] == samples[i].label) ++hits;
  }
  rep.n = samples.size();
  rep.accuracy = static_cast<double>(hits) / static_cast<double>(samples.size());
  return rep;
}

void write_clf_eval_csv(const std::string& path, const ClfEvalReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write eval csv: " + path);
  out << "true,pred_stubborn,pred_suggestible,pred_neutral\n";
  const char* names[3] = {"stubborn", "suggestible", "neutral"};
  for (std::size_t t = 0; t < report.confusion.size(); ++t) {
    out << names[t];
    for (std::size_t p = 0; p < report.confusion[t].size(); ++p)
      out << "," << report.confusion[t][p];
    out << "\n";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "accuracy,%.6f,,\n", report.accuracy);
  out << buf;
}

std::vector<Personality> infer_episode_attributes(const ClassifierWeights& w,
                                                  const ClassifierConfig& cfg,
                                                  const Trajectory& episode) {
  auto samples = build_clf_dataset({episode}, cfg);
  std::vector<Personality> out;
  for (const ClfSample& s : samples) {
    const int pred = clf_predict(w, cfg, s);
    out.push_back(static_cast<Personality>(pred));
  }
  if (out.empty()) {
    // degenerate profiling episode (consensus at placement); fall back to
    // neutral for every benign agent
    for (const AgentRecord& a : episode.rounds[0].agents)
      if (a.personality != Personality::Malicious) out.push_back(Personality::Neutral);
  }
  return out;
}

namespace {
json clf_cfg_to_json(const ClassifierConfig& c) {
  return json{{"position_vocab", c.position_vocab},
              {"position_emb_dim", c.position_emb_dim},
              {"delta_emb_dim", c.delta_emb_dim},
              {"traj_hidden", c.traj_hidden},
              {"hash_buckets", c.hash_buckets},
              {"token_emb_dim", c.token_emb_dim},
              {"msg_hidden", c.msg_hidden},
              {"summary_hidden", c.summary_hidden},
              {"head_hidden", c.head_hidden},
              {"n_classes", c.n_classes},
              {"dropout", c.dropout},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"weight_decay", c.weight_decay},
              {"lr_start", c.lr_start},
              {"lr_end", c.lr_end},
              {"val_split", c.val_split},
              {"patience", c.patience},
              {"max_messages", c.max_messages},
              {"max_tokens_per_message", c.max_tokens_per_message}};
}
ClassifierConfig clf_cfg_from_json(const json& j) {
  ClassifierConfig c;
  c.position_vocab = j.at("position_vocab").get<int>();
  c.position_emb_dim = j.at("position_emb_dim").get<int>();
  c.delta_emb_dim = j.at("delta_emb_dim").get<int>();
  c.traj_hidden = j.at("traj_hidden").get<int>();
  c.hash_buckets = j.at("hash_buckets").get<int>();
  c.token_emb_dim = j.at("token_emb_dim").get<int>();
  c.msg_hidden = j.at("msg_hidden").get<int>();
  c.summary_hidden = j.at("summary_hidden").get<int>();
  c.head_hidden = j.at("head_hidden").get<int>();
  c.n_classes = j.at("n_classes").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.lr_start = j.at("lr_start").get<double>();
  c.lr_end = j.at("lr_end").get<double>();
  c.val_split = j.at("val_split").get<double>();
  c.patience = j.at("patience").get<int>();
  c.max_messages = j.at("max_messages").get<int>();
  c.max_tokens_per_message = j.at("max_tokens_per_message").get<int>();
  return c;
}
}  // namespace

void save_clf_checkpoint(const std::string& path, const ClassifierConfig& cfg,
                         ClassifierWeights& w) {
  save_checkpoint(path, "classifier", clf_cfg_to_json(cfg), w);
}

ClassifierConfig load_clf_checkpoint(const std::string& path, ClassifierWeights& w) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  json doc = json::parse(in);
  ClassifierConfig cfg = clf_cfg_from_json(doc.at("hyperparameters"));
  w = ClassifierWeights(cfg);
  load_checkpoint(path, "classifier", w);
  return cfg;
}

}  // namespace macs
