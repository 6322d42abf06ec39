#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rrn/optim.hpp"
#include "rrn/rrn_model.hpp"

namespace rrn {

struct ExperimentConfig {
  std::string name;
  RrnConfig rrn;
  std::size_t batch_size = 64;
  std::size_t epochs = 40;
  AdamSettings adam;
  std::uint64_t seed = 0;
  std::size_t folds = 4;
  double val_fraction = 0.1;       ///< share of each training fold held out for validation
  std::size_t augment_count = 0;   ///< interpolated subjects added before training
  std::size_t patience = 0;        ///< early-stop patience in epochs, 0 = off
  double threshold_factor = 1.1;   ///< epochs-to-threshold uses factor * best validation loss

  void validate() const;
};

/// The five landmark configurations: 5-landmarks, 3-regular, 3-cross,
/// 6-landmarks, 9-landmarks. Targets are the remaining 14 - n landmarks.
const std::vector<std::string>& preset_names();
/// Throws ConfigError listing the valid names.
ExperimentConfig preset(std::string_view name);

nlohmann::json to_json(const RrnConfig& config);
RrnConfig rrn_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace rrn
