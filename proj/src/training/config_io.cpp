#include "clear/training/config_io.hpp"

#include "clear/errors.hpp"
#include "clear/model/checkpoint.hpp"

namespace clear {

nlohmann::json to_json(const ClearConfig& cfg) {
  return {{"beta", cfg.beta},       {"alpha1", cfg.alpha1}, {"alpha2", cfg.alpha2},
          {"tau", cfg.tau},         {"metric", to_string(cfg.metric)},
          {"variant", to_string(cfg.variant)}, {"d_c", cfg.d_c}, {"d_s", cfg.d_s}};
}

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"channels", cfg.channels}, {"image_size", cfg.image_size}, {"d_c", cfg.d_c},
          {"d_s", cfg.d_s},           {"num_classes", cfg.num_classes}};
}

ClearConfig clear_config_from_json(const nlohmann::json& j) {
  ClearConfig c;
  c.beta = j.at("beta");
  c.alpha1 = j.at("alpha1");
  c.alpha2 = j.at("alpha2");
  c.tau = j.at("tau");
  c.metric = parse_metric(j.at("metric").get<std::string>());
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.d_c = j.at("d_c");
  c.d_s = j.at("d_s");
  c.validate();
  return c;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig m;
  m.channels = j.at("channels");
  m.image_size = j.at("image_size");
  m.d_c = j.at("d_c");
  m.d_s = j.at("d_s");
  m.num_classes = j.at("num_classes");
  m.validate();
  return m;
}

std::string checkpoint_config(const ModelConfig& model, const ClearConfig& clear, std::uint64_t seed) {
  return nlohmann::json{{"model", to_json(model)}, {"clear", to_json(clear)}, {"seed", seed}}.dump();
}

LoadedModel load_model(const std::filesystem::path& checkpoint) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ck.config_json);
    LoadedModel out{ClearModel(model_config_from_json(j.at("model")), clear_config_from_json(j.at("clear")).variant,
                               j.at("seed").get<std::uint64_t>()),
                    clear_config_from_json(j.at("clear")), j.at("seed").get<std::uint64_t>()};
    restore_parameters(ck, out.model.parameters());
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(checkpoint.string() + ": bad checkpoint config: " + e.what());
  }
}

}  // namespace clear
