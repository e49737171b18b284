#include "pgso/nn/checkpoint.hpp"

#include <fstream>

#include "pgso/errors.hpp"

namespace pgso::nn {

nlohmann::json to_json(const ParameterSet& params) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, t] : params) {
    tensors.push_back({{"name", name}, {"shape", t.shape()}, {"values", t.to_vector()}});
  }
  return {{"format", "pgso-parameters"}, {"version", 1}, {"tensors", tensors}};
}

ParameterSet parameter_set_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "pgso-parameters") {
    throw ConfigError("not a pgso parameter record");
  }
  ParameterSet out;
  for (const auto& entry : j.at("tensors")) {
    out.emplace_back(entry.at("name").get<std::string>(),
                     Tensor(entry.at("shape").get<Shape>(),
                            entry.at("values").get<std::vector<double>>()));
  }
  return out;
}

void append_mlp(ParameterSet& set, const std::string& prefix, const Mlp& mlp) {
  for (std::size_t k = 0; k < mlp.layer_count(); ++k) {
    const std::string base = prefix + "." + std::to_string(k);
    set.emplace_back(base + ".weight", mlp.layers()[k].weight);
    set.emplace_back(base + ".bias", mlp.layers()[k].bias);
  }
}

void load_mlp(const ParameterSet& set, const std::string& prefix, Mlp& mlp) {
  auto find = [&](const std::string& name) -> const Tensor& {
    for (const auto& [n, t] : set) {
      if (n == name) return t;
    }
    throw ConfigError("checkpoint is missing tensor " + name);
  };
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k < mlp.layer_count(); ++k) {
    const std::string base = prefix + "." + std::to_string(k);
    const Tensor& w = find(base + ".weight");
    const Tensor& b = find(base + ".bias");
    if (w.shape() != mlp.layers()[k].weight.shape() ||
        b.shape() != mlp.layers()[k].bias.shape()) {
      throw DimensionError("checkpoint tensor " + base +
                           " does not match the network architecture");
    }
    layers.push_back({w, b});
  }
  mlp = Mlp(std::move(layers));
}

void save_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return nlohmann::json::parse(in);
}

}  // namespace pgso::nn
