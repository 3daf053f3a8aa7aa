#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "vatspam/error.hpp"
#include "vatspam/model.hpp"

namespace vatspam {

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return nlohmann::json{{"layers", c.layers},
                        {"heads", c.heads},
                        {"hidden", c.hidden},
                        {"ff_dim", c.ff_dim},
                        {"max_len", c.max_len},
                        {"vocab_size", c.vocab_size},
                        {"dropout", c.dropout},
                        {"num_classes", c.num_classes},
                        {"head_layers", c.head_layers},
                        {"seed", c.seed}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.layers = j.at("layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.ff_dim = j.at("ff_dim").get<int>();
    c.max_len = j.at("max_len").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.num_classes = j.at("num_classes").get<int>();
    c.head_layers = j.at("head_layers").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("checkpoint config: ") + e.what());
  }
  return c;
}

// JSON container: {"config": {...}, "params": {name: {"shape": [...], "data": [...]}}}.
// nlohmann keeps object keys sorted and emits shortest round-trip doubles, so
// identical parameters serialize to identical bytes.
inline void save_checkpoint(const TransformerClassifier& model, const std::string& path) {
  nlohmann::json j;
  j["config"] = config_to_json(model.config());
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, t] : model.params()) {
    nlohmann::json shape = nlohmann::json::array();
    for (int d : t.shape()) shape.push_back(d);
    params[name] = nlohmann::json{{"shape", shape}, {"data", t.values()}};
  }
  j["params"] = std::move(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("checkpoint: cannot write " + path);
  out << j.dump() << '\n';
}

inline TransformerClassifier load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("checkpoint: cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("checkpoint parse: ") + e.what());
  }
  TransformerClassifier model(config_from_json(j.at("config")));
  const auto& params = j.at("params");
  for (auto& [name, t] : model.params()) {
    if (!params.contains(name)) throw data_error("checkpoint: missing parameter '" + name + "'");
    const auto& entry = params.at(name);
    Shape shape;
    for (const auto& d : entry.at("shape")) shape.push_back(d.get<int>());
    if (shape != t.shape())
      throw data_error("checkpoint: shape mismatch for '" + name + "': file " + shape_str(shape) +
                       " vs model " + shape_str(t.shape()));
    const auto& data = entry.at("data");
    if (data.size() != t.size()) throw data_error("checkpoint: data length mismatch for '" + name + "'");
    auto& v = t.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = data[i].get<double>();
  }
  return model;
}

}  // namespace vatspam
