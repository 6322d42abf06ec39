#include "rrn/experiment.hpp"

#include <algorithm>

#include "rrn/error.hpp"

namespace rrn {
namespace {

using L = LandmarkName;

struct PresetInputs {
  std::string_view name;
  std::vector<LandmarkName> inputs;
};

const std::vector<PresetInputs>& preset_table() {
  static const std::vector<PresetInputs> table = {
      {"5-landmarks", {L::Me, L::CdL, L::CdR, L::CorL, L::CorR}},
      {"3-regular", {L::Me, L::CdL, L::CdR}},
      {"3-cross", {L::Me, L::CdR, L::CorL}},
      {"6-landmarks", {L::Me, L::CdL, L::CdR, L::CorL, L::CorR, L::Na}},
      {"9-landmarks", {L::Me, L::CdL, L::CdR, L::CorL, L::CorR, L::Gn, L::Pg, L::B, L::Id}},
  };
  return table;
}

std::vector<std::string> names_of(const std::vector<LandmarkName>& names) {
  std::vector<std::string> out;
  for (auto n : names) out.emplace_back(to_string(n));
  return out;
}

std::vector<LandmarkName> landmarks_of(const nlohmann::json& j) {
  std::vector<LandmarkName> out;
  for (const auto& s : j) out.push_back(landmark_from_string(s.get<std::string>()));
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  rrn.validate();
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in [0, 1)");
  if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(threshold_factor >= 1.0)) throw ConfigError("threshold factor must be >= 1");
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& p : preset_table()) out.emplace_back(p.name);
    return out;
  }();
  return names;
}

ExperimentConfig preset(std::string_view name) {
  for (const auto& p : preset_table()) {
    if (p.name != name) continue;
    ExperimentConfig config;
    config.name = std::string(name);
    config.rrn.input_names = p.inputs;
    for (auto l : all_landmarks()) {
      if (std::find(p.inputs.begin(), p.inputs.end(), l) == p.inputs.end()) config.rrn.target_names.push_back(l);
    }
    return config;
  }
  std::string valid;
  for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + std::string(name) + "' (valid: " + valid + ")");
}

nlohmann::json to_json(const RrnConfig& c) {
  return {{"input_names", names_of(c.input_names)},
          {"target_names", names_of(c.target_names)},
          {"ru_variant", to_string(c.ru_variant)},
          {"relation_dim", c.relation_dim},
          {"mlp_hidden", c.mlp_hidden},
          {"dropout",
           {{"mode", to_string(c.dropout.mode)},
            {"p", c.dropout.p},
            {"init_log_alpha", c.dropout.init_log_alpha},
            {"gamma", c.dropout.gamma},
            {"alpha", c.dropout.alpha}}},
          {"shared_pairwise", c.shared_pairwise},
          {"normalize", c.normalize}};
}

RrnConfig rrn_config_from_json(const nlohmann::json& j) {
  RrnConfig c;
  c.input_names = landmarks_of(j.at("input_names"));
  c.target_names = landmarks_of(j.at("target_names"));
  c.ru_variant = ru_variant_from_string(j.at("ru_variant").get<std::string>());
  c.relation_dim = j.at("relation_dim").get<std::size_t>();
  c.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
  const auto& d = j.at("dropout");
  c.dropout.mode = dropout_mode_from_string(d.at("mode").get<std::string>());
  c.dropout.p = d.at("p").get<double>();
  c.dropout.init_log_alpha = d.at("init_log_alpha").get<double>();
  c.dropout.gamma = d.at("gamma").get<double>();
  c.dropout.alpha = d.at("alpha").get<double>();
  c.shared_pairwise = j.at("shared_pairwise").get<bool>();
  c.normalize = j.at("normalize").get<bool>();
  c.validate();
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"name", c.name},
          {"rrn", to_json(c.rrn)},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"adam", {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
          {"seed", c.seed},
          {"folds", c.folds},
          {"val_fraction", c.val_fraction},
          {"augment_count", c.augment_count},
          {"patience", c.patience},
          {"threshold_factor", c.threshold_factor}};
}

}  // namespace rrn
