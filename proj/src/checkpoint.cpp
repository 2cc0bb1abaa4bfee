#include "macs/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace macs {

using nlohmann::json;

void save_checkpoint(const std::string& path, const std::string& component,
                     const json& hyperparameters,
                     std::vector<nn::NamedTensorRef> tensors) {
  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["component"] = component;
  doc["hyperparameters"] = hyperparameters;
  json arr = json::array();
  for (const auto& ref : tensors) {
    json t;
    t["name"] = ref.name;
    t["shape"] = ref.tensor->shape;
    t["data"] = ref.tensor->data;
    arr.push_back(std::move(t));
  }
  doc["tensors"] = std::move(arr);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << doc.dump() << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

json load_checkpoint(const std::string& path, const std::string& component,
                     std::vector<nn::NamedTensorRef> tensors) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  json doc = json::parse(in);
  if (doc.value("format_version", -1) != kCheckpointFormatVersion)
    throw std::runtime_error("checkpoint " + path + ": unsupported format_version");
  if (doc.value("component", "") != component)
    throw std::runtime_error("checkpoint " + path + ": component is '" +
                             doc.value("component", "") + "', expected '" + component + "'");
  const auto& arr = doc.at("tensors");
  if (arr.size() != tensors.size())
    throw std::runtime_error("checkpoint " + path + ": tensor count mismatch");
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const auto& t = arr[k];
    if (t.at("name").get<std::string>() != tensors[k].name)
      throw std::runtime_error("checkpoint " + path + ": tensor order mismatch at '" +
                               tensors[k].name + "'");
    const auto shape = t.at("shape").get<std::vector<int>>();
    if (shape != tensors[k].tensor->shape)
      throw std::runtime_error("checkpoint " + path + ": shape mismatch for '" +
                               tensors[k].name + "'");
    tensors[k].tensor->data = t.at("data").get<std::vector<double>>();
    if (tensors[k].tensor->data.size() != Tensor::numel_of(shape))
      throw std::runtime_error("checkpoint " + path + ": data length mismatch for '" +
                               tensors[k].name + "'");
  }
  return doc.at("hyperparameters");
}

}  // namespace macs
