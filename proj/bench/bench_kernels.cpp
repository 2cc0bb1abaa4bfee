// Compares the OpenMP kernels against the serial reference path on the two
// hot loops: batched world-model inference (parallel_for) and one training
// epoch of block-accumulated gradients (parallel_blocks). Also asserts that
// both paths produce bitwise-identical numbers.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "macs/env.hpp"
#include "macs/parallel.hpp"
#include "macs/policies.hpp"
#include "macs/world_model.hpp"

using namespace macs;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<WmTransition> make_dataset(int episodes) {
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
  for (int i = 0; i < episodes; ++i) {
    EnvConfig cfg;
    cfg.seed = 100 + static_cast<std::uint64_t>(i);
    trajs.push_back(run_episode(cfg, ps, raw, &attacker, i));
  }
  return build_wm_dataset(trajs);
}

}  // namespace

int main() {
  const auto dataset = make_dataset(200);
  WorldModelConfig cfg;
  cfg.epochs = 2;
  std::printf("dataset: %zu transitions, %d worker thread(s) available\n", dataset.size(),
              worker_count());

  // inference: parallel_for over samples
  WorldModelWeights w(cfg);
  Rng rng(1);
  w.init(rng);
  std::vector<double> serial_pred(dataset.size()), parallel_pred(dataset.size());
  double t_inf_serial, t_inf_parallel;
  {
    set_parallel_enabled(false);
    const auto t0 = std::chrono::steady_clock::now();
    parallel_for(dataset.size(),
                 [&](std::size_t i) { serial_pred[i] = wm_predict(w, cfg, dataset[i]); });
    t_inf_serial = seconds_since(t0);
  }
  {
    set_parallel_enabled(true);
    const auto t0 = std::chrono::steady_clock::now();
    parallel_for(dataset.size(), [&](std::size_t i) {
      parallel_pred[i] = wm_predict(w, cfg, dataset[i]);
    });
    t_inf_parallel = seconds_since(t0);
  }
  bool identical = serial_pred == parallel_pred;
  std::printf("inference : serial %.3fs, openmp %.3fs, speedup %.2fx, identical %s\n",
              t_inf_serial, t_inf_parallel, t_inf_serial / t_inf_parallel,
              identical ? "yes" : "NO");

  // training: parallel_blocks gradient accumulation inside wm_train
  set_parallel_enabled(false);
  auto t0 = std::chrono::steady_clock::now();
  auto r_serial = wm_train(dataset, cfg, 7);
  const double t_train_serial = seconds_since(t0);
  set_parallel_enabled(true);
  t0 = std::chrono::steady_clock::now();
  auto r_parallel = wm_train(dataset, cfg, 7);
  const double t_train_parallel = seconds_since(t0);
  bool same_losses = r_serial.val_loss == r_parallel.val_loss;
  auto ts = nn::named_tensors(r_serial.final_epoch);
  auto tp = nn::named_tensors(r_parallel.final_epoch);
  bool same_weights = true;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (ts[i].tensor->data != tp[i].tensor->data) same_weights = false;
  std::printf("training  : serial %.3fs, openmp %.3fs, speedup %.2fx, identical %s\n",
              t_train_serial, t_train_parallel, t_train_serial / t_train_parallel,
              (same_losses && same_weights) ? "yes" : "NO");

  if (!identical || !same_losses || !same_weights) {
    std::printf("FAIL: serial and parallel paths disagree\n");
    return 1;
  }
  return 0;
}
