#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgso/nn/mlp.hpp"
#include "pgso/nn/tensor.hpp"

namespace pgso::nn {

/// Ordered (name, tensor) list, serialized as JSON with shortest
/// round-trip doubles.
using ParameterSet = std::vector<std::pair<std::string, Tensor>>;

nlohmann::json to_json(const ParameterSet& params);
ParameterSet parameter_set_from_json(const nlohmann::json& j);

void append_mlp(ParameterSet& set, const std::string& prefix, const Mlp& mlp);
/// Overwrites `mlp` with the tensors named `prefix.<k>.weight/bias`.
void load_mlp(const ParameterSet& set, const std::string& prefix, Mlp& mlp);

void save_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace pgso::nn
