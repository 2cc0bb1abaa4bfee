#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "macs/env.hpp"
#include "macs/nn.hpp"

namespace macs {

// One classification sample: a single benign agent observed for one episode.
// Sequences cover the placement round plus every update round that happened.
struct ClfSample {
  std::vector<int> positions;               // own position per round
  std::vector<double> others_mean;          // mean of all other agents, per round
  std::vector<std::vector<std::string>> messages;  // own tokens per update round
  int label = 0;                            // personality id, 0..2
};

struct ClassifierConfig {
  int position_vocab = 21;  // 0..max_position inclusive
  int position_emb_dim = 16;
  int delta_emb_dim = 16;
  int traj_hidden = 32;
  int hash_buckets = 1024;
  int token_emb_dim = 64;
  int msg_hidden = 128;
  int summary_hidden = 32;
  int head_hidden = 128;
  int n_classes = 3;
  double dropout = 0.2;
  int epochs = 20;
  int batch_size = 16;
  double weight_decay = 1e-5;
  double lr_start = 2e-4;
  double lr_end = 5e-5;
  double val_split = 0.1;
  int patience = 15;
  int max_messages = 10;
  int max_tokens_per_message = 48;

  void validate() const;
};

struct ClassifierWeights {
  nn::EmbeddingParams pos_emb;     // [position_vocab, position_emb_dim]
  nn::EmbeddingParams delta_emb;   // 7 signed-step buckets
  nn::GruParams traj_gru;          // over (pos emb, delta emb) pairs
  nn::EmbeddingParams token_emb;   // hashed bag of tokens
  nn::GruParams msg_gru;           // over per-message pooled embeddings
  nn::DenseParams summary;         // 9 features -> summary_hidden
  nn::DenseParams head1, head2;

  ClassifierWeights() = default;
  explicit ClassifierWeights(const ClassifierConfig& cfg);

  void init(Rng& rng);
  void zero();

  template <class F>
  void visit(F&& f) {
    f("pos_emb", pos_emb);
    f("delta_emb", delta_emb);
    f("traj_gru", traj_gru);
    f("token_emb", token_emb);
    f("msg_gru", msg_gru);
    f("summary", summary);
    f("head.l1", head1);
    f("head.l2", head2);
  }
};

// Signed step -> 7 buckets: <=-3, -2, -1, 0, +1, +2, >=+3.
int delta_bucket(int delta);

// Stable token hash (FNV-1a folded into [0, buckets)).
int token_bucket(const std::string& token, int buckets);

// Nine scalar statistics of the own-position / others-mean sequences, all
// normalized by max_position. Throws if the sequences are shorter than 2.
std::array<double, 9> summary_features(const std::vector<int>& positions,
                                       const std::vector<double>& others_mean,
                                       int max_position);

// One sample per benign agent per trajectory.
std::vector<ClfSample> build_clf_dataset(const std::vector<Trajectory>& trajectories,
                                         const ClassifierConfig& cfg);

// Class weights alpha_c = N / (n_classes * N_c). Throws if a class is absent.
std::vector<double> class_weights(const std::vector<ClfSample>& samples, int n_classes);

// Logits for one sample, dropout off.
std::vector<double> clf_forward_logits(const ClassifierWeights& w,
                                       const ClassifierConfig& cfg, const ClfSample& s);
int clf_predict(const ClassifierWeights& w, const ClassifierConfig& cfg,
                const ClfSample& s);

struct ClfTrainResult {
  ClassifierWeights best;          // highest val accuracy, ties by lower val loss
  std::vector<double> train_loss;  // per completed epoch
  std::vector<double> val_loss;
  std::vector<double> val_accuracy;
  int best_epoch = -1;
  std::vector<ClfSample> val_set;
};

ClfTrainResult clf_train(const std::vector<ClfSample>& dataset,
                         const ClassifierConfig& cfg, std::uint64_t seed);

struct ClfEvalReport {
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][pred]
  std::size_t n = 0;
};

ClfEvalReport clf_evaluate(const ClassifierWeights& w, const ClassifierConfig& cfg,
                           const std::vector<ClfSample>& samples);
void write_clf_eval_csv(const std::string& path, const ClfEvalReport& report);

// Profiling inference: one predicted personality per benign agent of the
// episode, in agent-id order.
std::vector<Personality> infer_episode_attributes(const ClassifierWeights& w,
                                                  const ClassifierConfig& cfg,
                                                  const Trajectory& episode);

void save_clf_checkpoint(const std::string& path, const ClassifierConfig& cfg,
                         ClassifierWeights& w);
ClassifierConfig load_clf_checkpoint(const std::string& path, ClassifierWeights& w);

}  // namespace macs
