#include "macs/config.hpp"

#include <fstream>
#include <stdexcept>

namespace macs {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

ojson run_config_to_json(const RunConfig& c) {
  ojson j;
  j["env"] = {{"max_position", c.env.max_position},
              {"max_rounds", c.env.max_rounds},
              {"n_benign", c.env.n_benign},
              {"n_malicious", c.env.n_malicious},
              {"consensus_tolerance", c.env.consensus_tolerance},
              {"full_visibility", c.env.full_visibility}};
  j["world_model"] = {{"embedding_dim", c.world_model.embedding_dim},
                      {"hidden_dim", c.world_model.hidden_dim},
                      {"dropout", c.world_model.dropout},
                      {"epochs", c.world_model.epochs},
                      {"batch_size", c.world_model.batch_size},
                      {"weight_decay", c.world_model.weight_decay},
                      {"lr_start", c.world_model.lr_start},
                      {"lr_end", c.world_model.lr_end},
                      {"val_split", c.world_model.val_split},
                      {"suggestible_weight", c.world_model.suggestible_weight},
                      {"label_noise_sigma", c.world_model.label_noise_sigma}};
  j["classifier"] = {{"position_emb_dim", c.classifier.position_emb_dim},
                     {"delta_emb_dim", c.classifier.delta_emb_dim},
                     {"traj_hidden", c.classifier.traj_hidden},
                     {"hash_buckets", c.classifier.hash_buckets},
                     {"token_emb_dim", c.classifier.token_emb_dim},
                     {"msg_hidden", c.classifier.msg_hidden},
                     {"summary_hidden", c.classifier.summary_hidden},
                     {"head_hidden", c.classifier.head_hidden},
                     {"dropout", c.classifier.dropout},
                     {"epochs", c.classifier.epochs},
                     {"batch_size", c.classifier.batch_size},
                     {"weight_decay", c.classifier.weight_decay},
                     {"lr_start", c.classifier.lr_start},
                     {"lr_end", c.classifier.lr_end},
                     {"val_split", c.classifier.val_split},
                     {"patience", c.classifier.patience},
                     {"max_messages", c.classifier.max_messages},
                     {"max_tokens_per_message", c.classifier.max_tokens_per_message}};
  j["dqn"] = {{"hidden", c.dqn.hidden},
              {"gamma", c.dqn.gamma},
              {"lr", c.dqn.lr},
              {"buffer_capacity", c.dqn.buffer_capacity},
              {"learning_starts", c.dqn.learning_starts},
              {"target_update_interval", c.dqn.target_update_interval},
              {"batch_size", c.dqn.batch_size},
              {"n_envs", c.dqn.n_envs},
              {"eps_start", c.dqn.eps_start},
              {"eps_end", c.dqn.eps_end},
              {"eps_fraction", c.dqn.eps_fraction},
              {"total_steps", c.dqn.total_steps},
              {"eval_interval", c.dqn.eval_interval},
              {"eval_episodes", c.dqn.eval_episodes}};
  j["harness"] = {{"corpus_episodes", c.harness.corpus_episodes},
                  {"eval_episodes_per_composition",
                   c.harness.eval_episodes_per_composition},
                  {"classifier_corpus_episodes",
                   c.harness.classifier_corpus_episodes}};
  return j;
}

namespace {

// Recursively overlay `patch` onto `base`, complaining about keys the schema
// does not know.
void overlay(ojson& base, const json& patch, const std::string& prefix,
             std::vector<std::string>& errors) {
  if (!patch.is_object()) {
    errors.push_back(prefix.empty() ? "top level must be an object"
                                    : prefix + ": expected an object");
    return;
  }
  for (const auto& [key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) {
      errors.push_back("unknown key: " + path);
      continue;
    }
    if (base[key].is_object()) {
      overlay(base[key], value, path, errors);
    } else if (value.is_object() || value.is_array()) {
      errors.push_back(path + ": expected a scalar");
    } else {
      base[key] = value;
    }
  }
}

template <class T>
T field(const ojson& j, const char* section, const char* key) {
  return j.at(section).at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  RunConfig defaults;
  ojson merged = run_config_to_json(defaults);
  std::vector<std::string> errors;
  overlay(merged, j, "", errors);

  RunConfig c;
  if (errors.empty()) {
    c.env.max_position = field<int>(merged, "env", "max_position");
    c.env.max_rounds = field<int>(merged, "env", "max_rounds");
    c.env.n_benign = field<int>(merged, "env", "n_benign");
    c.env.n_malicious = field<int>(merged, "env", "n_malicious");
    c.env.consensus_tolerance = field<double>(merged, "env", "consensus_tolerance");
    c.env.full_visibility = field<bool>(merged, "env", "full_visibility");

    c.world_model.embedding_dim = field<int>(merged, "world_model", "embedding_dim");
    c.world_model.hidden_dim = field<int>(merged, "world_model", "hidden_dim");
    c.world_model.dropout = field<double>(merged, "world_model", "dropout");
    c.world_model.epochs = field<int>(merged, "world_model", "epochs");
    c.world_model.batch_size = field<int>(merged, "world_model", "batch_size");
    c.world_model.weight_decay = field<double>(merged, "world_model", "weight_decay");
    c.world_model.lr_start = field<double>(merged, "world_model", "lr_start");
    c.world_model.lr_end = field<double>(merged, "world_model", "lr_end");
    c.world_model.val_split = field<double>(merged, "world_model", "val_split");
    c.world_model.suggestible_weight =
        field<double>(merged, "world_model", "suggestible_weight");
    c.world_model.label_noise_sigma =
        field<double>(merged, "world_model", "label_noise_sigma");
    c.world_model.n_agents = c.env.n_benign + c.env.n_malicious;
    c.world_model.max_position = c.env.max_position;

    c.classifier.position_vocab = c.env.max_position + 1;
    c.classifier.position_emb_dim = field<int>(merged, "classifier", "position_emb_dim");
    c.classifier.delta_emb_dim = field<int>(merged, "classifier", "delta_emb_dim");
    c.classifier.traj_hidden = field<int>(merged, "classifier", "traj_hidden");
    c.classifier.hash_buckets = field<int>(merged, "classifier", "hash_buckets");
    c.classifier.token_emb_dim = field<int>(merged, "classifier", "token_emb_dim");
    c.classifier.msg_hidden = field<int>(merged, "classifier", "msg_hidden");
    c.classifier.summary_hidden = field<int>(merged, "classifier", "summary_hidden");
    c.classifier.head_hidden = field<int>(merged, "classifier", "head_hidden");
    c.classifier.dropout = field<double>(merged, "classifier", "dropout");
    c.classifier.epochs = field<int>(merged, "classifier", "epochs");
    c.classifier.batch_size = field<int>(merged, "classifier", "batch_size");
    c.classifier.weight_decay = field<double>(merged, "classifier", "weight_decay");
    c.classifier.lr_start = field<double>(merged, "classifier", "lr_start");
    c.classifier.lr_end = field<double>(merged, "classifier", "lr_end");
    c.classifier.val_split = field<double>(merged, "classifier", "val_split");
    c.classifier.patience = field<int>(merged, "classifier", "patience");
    c.classifier.max_messages = field<int>(merged, "classifier", "max_messages");
    c.classifier.max_tokens_per_message =
        field<int>(merged, "classifier", "max_tokens_per_message");

    c.dqn.n_actions = c.env.max_position + 1;
    c.dqn.hidden = field<int>(merged, "dqn", "hidden");
    c.dqn.gamma = field<double>(merged, "dqn", "gamma");
    c.dqn.lr = field<double>(merged, "dqn", "lr");
    c.dqn.buffer_capacity = field<std::size_t>(merged, "dqn", "buffer_capacity");
    c.dqn.learning_starts = field<std::size_t>(merged, "dqn", "learning_starts");
    c.dqn.target_update_interval =
        field<int>(merged, "dqn", "target_update_interval");
    c.dqn.batch_size = field<int>(merged, "dqn", "batch_size");
    c.dqn.n_envs = field<int>(merged, "dqn", "n_envs");
    c.dqn.eps_start = field<double>(merged, "dqn", "eps_start");
    c.dqn.eps_end = field<double>(merged, "dqn", "eps_end");
    c.dqn.eps_fraction = field<double>(merged, "dqn", "eps_fraction");
    c.dqn.total_steps = field<std::int64_t>(merged, "dqn", "total_steps");
    c.dqn.eval_interval = field<std::int64_t>(merged, "dqn", "eval_interval");
    c.dqn.eval_episodes = field<int>(merged, "dqn", "eval_episodes");

    c.harness.corpus_episodes = field<int>(merged, "harness", "corpus_episodes");
    c.harness.eval_episodes_per_composition =
        field<int>(merged, "harness", "eval_episodes_per_composition");
    c.harness.classifier_corpus_episodes =
        field<int>(merged, "harness", "classifier_corpus_episodes");

    auto check = [&](const char* stage, auto&& fn) {
      try {
        fn();
      } catch (const std::exception& e) {
        errors.push_back(std::string(stage) + ": " + e.what());
      }
    };
    check("env", [&] { c.env.validate(); });
    check("world_model", [&] { c.world_model.validate(); });
    check("classifier", [&] { c.classifier.validate(); });
    check("dqn", [&] { c.dqn.validate(); });
    if (c.harness.corpus_episodes <= 0 || c.harness.eval_episodes_per_composition <= 0 ||
        c.harness.classifier_corpus_episodes <= 0)
      errors.push_back("harness: episode counts must be positive");
  }

  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const std::string& e : errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config: " + path);
  json j = json::parse(in);
  return run_config_from_json(j);
}

std::uint64_t config_hash(const RunConfig& c) {
  const std::string s = run_config_to_json(c).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_manifest(const std::string& path, const RunManifest& m) {
  ojson j;
  j["command"] = m.command;
  j["seed"] = m.seed;
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(m.config_hash));
  j["config_hash"] = buf;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace macs
