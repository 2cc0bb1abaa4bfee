#pragma once

#include <string>

#include "json.hpp"
#include "macs/nn.hpp"

namespace macs {

// Single-document JSON checkpoint:
//   {format_version, component, hyperparameters, tensors:[{name, shape, data}]}
// Tensors are written in the model's visit order; loading matches by name and
// validates shapes.
inline constexpr int kCheckpointFormatVersion = 1;

void save_checkpoint(const std::string& path, const std::string& component,
                     const nlohmann::json& hyperparameters,
                     std::vector<nn::NamedTensorRef> tensors);

// Returns the stored hyperparameters. Throws on version/component/shape
// mismatch or missing tensors.
nlohmann::json load_checkpoint(const std::string& path, const std::string& component,
                               std::vector<nn::NamedTensorRef> tensors);

template <class Weights>
void save_checkpoint(const std::string& path, const std::string& component,
                     const nlohmann::json& hyperparameters, Weights& w) {
  save_checkpoint(path, component, hyperparameters, nn::named_tensors(w));
}

template <class Weights>
nlohmann::json load_checkpoint(const std::string& path, const std::string& component,
                               Weights& w) {
  return load_checkpoint(path, component, nn::named_tensors(w));
}

}  // namespace macs
