#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "clear/losses/config.hpp"
#include "clear/model/networks.hpp"

namespace clear {

nlohmann::json to_json(const ClearConfig& cfg);
nlohmann::json to_json(const ModelConfig& cfg);
ClearConfig clear_config_from_json(const nlohmann::json& j);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Text stored in checkpoints: {"model": ..., "clear": ..., "seed": ...}.
std::string checkpoint_config(const ModelConfig& model, const ClearConfig& clear, std::uint64_t seed);

struct LoadedModel {
  ClearModel model;
  ClearConfig clear;
  std::uint64_t seed = 0;
};

/// Rebuilds the architecture recorded in the checkpoint and restores its weights.
LoadedModel load_model(const std::filesystem::path& checkpoint);

}  // namespace clear
