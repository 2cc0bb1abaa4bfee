#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "macs/env.hpp"
#include "macs/nn.hpp"

namespace macs {

// One world-model training sample: predict a single benign agent's next
// position from the current joint position vector, all personality ids and
// the attacker's declared position. The position vector is reordered so the
// target agent comes first; the tail is sorted by (personality id, position)
// so the encoder sees a canonical order.
struct WmTransition {
  int target_agent_id = 0;
  std::vector<int> positions;
  std::vector<Personality> personalities;
  int attacker_position = 0;
  int label = 0;

  std::string to_json_line() const;
  static WmTransition from_json_line(const std::string& line);
};

struct WorldModelConfig {
  int embedding_dim = 128;
  int hidden_dim = 128;
  double dropout = 0.1;
  int epochs = 50;
  int batch_size = 64;
  double weight_decay = 1e-5;
  double lr_start = 1e-3;
  double lr_end = 1e-4;
  double val_split = 0.1;
  double suggestible_weight = 3.0;
  double other_weight = 1.0;
  double label_noise_sigma = 0.0;  // optional gaussian label jitter
  int n_agents = 4;
  int max_position = 20;

  void validate() const;
  double target_weight(Personality p) const {
    return p == Personality::Suggestible ? suggestible_weight : other_weight;
  }
};

// Shared encoders plus one prediction head per benign personality.
struct WorldModelWeights {
  nn::DenseParams pos1, pos2;       // positions -> hidden -> hidden
  nn::EmbeddingParams type_emb;     // 4 personalities
  nn::DenseParams type1, type2;     // flattened embeddings -> hidden -> hidden
  nn::DenseParams head1[3], head2[3];  // per-personality: 2*hidden -> hidden -> 1

  WorldModelWeights() = default;
  explicit WorldModelWeights(const WorldModelConfig& cfg);

  void init(Rng& rng);
  void zero();

  template <class F>
  void visit(F&& f) {
    f("pos_mlp.l1", pos1);
    f("pos_mlp.l2", pos2);
    f("type_emb", type_emb);
    f("type_mlp.l1", type1);
    f("type_mlp.l2", type2);
    static const char* head_names1[3] = {"head.stubborn.l1", "head.suggestible.l1",
                                         "head.neutral.l1"};
    static const char* head_names2[3] = {"head.stubborn.l2", "head.suggestible.l2",
                                         "head.neutral.l2"};
    for (int k = 0; k < 3; ++k) {
      f(head_names1[k], head1[k]);
      f(head_names2[k], head2[k]);
    }
  }
};

// Builds one transition per (benign agent, consecutive round pair).
// Trajectories with fewer than 2 rounds contribute nothing.
std::vector<WmTransition> build_wm_dataset(const std::vector<Trajectory>& trajectories);

// Canonical input ordering used by both dataset building and inference.
WmTransition make_wm_input(const std::vector<int>& positions,
                           const std::vector<Personality>& personalities,
                           int target_index, int attacker_position);

// Unclamped continuous next-position prediction. Dropout is off unless a
// training rng is supplied. Throws for a malicious target (no head exists).
double wm_predict(const WorldModelWeights& w, const WorldModelConfig& cfg,
                  const WmTransition& input);

struct WmEvalRow {
  std::string personality;
  double mae = 0.0;
  double accuracy = 0.0;
  std::size_t n = 0;
};

struct WmEvalReport {
  std::vector<WmEvalRow> per_personality;
  WmEvalRow overall;
};

WmEvalReport wm_evaluate(const WorldModelWeights& w, const WorldModelConfig& cfg,
                         const std::vector<WmTransition>& held_out);
void write_wm_eval_csv(const std::string& path, const WmEvalReport& report);

// Oracle baselines for the acceptance gate: persistence predicts
// y^{t+1} = y^t, global-mean predicts the training-set mean label.
double persistence_baseline_mae(const std::vector<WmTransition>& data);
double global_mean_baseline_mae(const std::vector<WmTransition>& train,
                                const std::vector<WmTransition>& held_out);

struct WmTrainResult {
  WorldModelWeights best;          // lowest validation loss
  WorldModelWeights final_epoch;
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;
  int best_epoch = -1;
  std::vector<WmTransition> val_set;
};

WmTrainResult wm_train(const std::vector<WmTransition>& dataset,
                       const WorldModelConfig& cfg, std::uint64_t seed);

// One surrogate environment step: every benign agent's next position is the
// rounded, clamped model prediction with the attacker slot set to
// attacker_position. Deterministic; throws on non-finite output.
std::vector<int> wm_surrogate_step(const WorldModelWeights& w, const WorldModelConfig& cfg,
                                   const std::vector<int>& benign_positions,
                                   const std::vector<Personality>& benign_personalities,
                                   int attacker_position);

void save_wm_checkpoint(const std::string& path, const WorldModelConfig& cfg,
                        WorldModelWeights& w);
WorldModelConfig load_wm_checkpoint(const std::string& path, WorldModelWeights& w);

void write_wm_transitions(const std::string& path, const std::vector<WmTransition>& ts);
std::vector<WmTransition> read_wm_transitions(const std::string& path);

}  // namespace macs
