#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kieb/energy_net.hpp"
#include "kieb/tensor_file.hpp"

namespace kieb {

using ordered_json = nlohmann::ordered_json;

// Checkpoint container: same magic/version as tensor files with dtype code 4,
// followed by named sections ("meta" JSON first, then the parameter tensors
// in canonical architecture order). Loading keeps the raw meta text so that
// load -> save round trips byte-identically.
struct Checkpoint {
  std::string meta_text;
  ordered_json meta;
  std::vector<std::pair<std::string, TensorBlob>> params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

ordered_json net_spec_to_json(const NetSpec& spec);
NetSpec net_spec_from_json(const ordered_json& j);

// extra is merged into the meta object after the architecture fields.
template <typename T>
Checkpoint make_checkpoint(const EnergyModel<T>& model, const ordered_json& extra);

struct LoadedModel {
  std::variant<std::monostate, EnergyModel<float>, EnergyModel<double>> model;
  ordered_json meta;
  Domain domain = Domain::image;
  Dtype precision = Dtype::real32;
};

LoadedModel load_model(const std::filesystem::path& path);

}  // namespace kieb
