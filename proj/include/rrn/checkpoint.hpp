#pragma once

#include <filesystem>

#include "json.hpp"
#include "rrn/rrn_model.hpp"

namespace rrn {

inline constexpr int kCheckpointVersion = 1;

/// Full model state: config, seed, unit layer specs, parameter and buffer
/// tensors (float64), Adam moments and step, RNG state, normalizers.
nlohmann::json checkpoint_json(RrnModel& model);
RrnModel model_from_checkpoint(const nlohmann::json& j);

/// Paths ending in ".json" are written as text JSON, anything else as CBOR.
void save_checkpoint(RrnModel& model, const std::filesystem::path& path);
/// Detects the encoding from the first byte. Throws LoadError.
RrnModel load_checkpoint(const std::filesystem::path& path);

}  // namespace rrn
