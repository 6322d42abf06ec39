#include "rrn/landmarks.hpp"

#include <algorithm>
#include <cmath>

#include "rrn/error.hpp"

namespace rrn {
namespace {

constexpr std::array<std::string_view, kNumLandmarks> kNames = {
    "Me", "Gn", "Pg", "B", "Id", "CorL", "CorR", "CdL", "CdR", "Ans", "A", "Pr", "Pns", "Na"};

}  // namespace

const std::array<LandmarkName, kNumLandmarks>& all_landmarks() {
  static const std::array<LandmarkName, kNumLandmarks> names = [] {
    std::array<LandmarkName, kNumLandmarks> out{};
    for (std::size_t i = 0; i < kNumLandmarks; ++i) out[i] = static_cast<LandmarkName>(i);
    return out;
  }();
  return names;
}

std::string_view to_string(LandmarkName name) { return kNames.at(index_of(name)); }

std::optional<LandmarkName> parse_landmark(std::string_view text) {
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    if (kNames[i] == text) return static_cast<LandmarkName>(i);
  }
  return std::nullopt;
}

LandmarkName landmark_from_string(std::string_view text) {
  if (auto name = parse_landmark(text)) return *name;
  std::string valid;
  for (auto n : kNames) {
    if (!valid.empty()) valid += ", ";
    valid += n;
  }
  throw ConfigError("unknown landmark '" + std::string(text) + "' (valid: " + valid + ")");
}

BoneGroup bone_group(LandmarkName name) {
  const auto i = index_of(name);
  if (i <= index_of(LandmarkName::CdR)) return BoneGroup::Mandibular;
  if (i <= index_of(LandmarkName::Pns)) return BoneGroup::Maxillary;
  return BoneGroup::Nasal;
}

std::vector<LandmarkName> canonical_order(std::vector<LandmarkName> names) {
  std::sort(names.begin(), names.end());
  return names;
}

const Vec3& LandmarkSet::at(LandmarkName name) const {
  auto it = coords.find(name);
  if (it == coords.end()) {
    throw DatasetError("subject '" + subject_id + "': missing landmark " + std::string(to_string(name)));
  }
  return it->second;
}

void LandmarkSet::validate() const {
  for (int axis = 0; axis < 3; ++axis) {
    if (!(std::isfinite(spacing_mm[axis]) && spacing_mm[axis] > 0.0)) {
      throw DatasetError("subject '" + subject_id + "': spacing_mm must be strictly positive");
    }
  }
  for (auto name : all_landmarks()) {
    const Vec3& p = at(name);
    if (!p.allFinite()) {
      throw DatasetError("subject '" + subject_id + "': landmark " + std::string(to_string(name)) +
                         " has non-finite coordinates");
    }
  }
}

}  // namespace rrn
