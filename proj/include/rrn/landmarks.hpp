#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace rrn {

using Vec3 = Eigen::Vector3d;

/// The 14 craniomaxillofacial landmarks. Enumerator order is the canonical
/// order used for every deterministic accumulation in the library.
enum class LandmarkName : int {
  Me = 0, Gn, Pg, B, Id, CorL, CorR, CdL, CdR,  // mandibular
  Ans, A, Pr, Pns,                               // maxillary
  Na                                             // nasal
};

inline constexpr std::size_t kNumLandmarks = 14;

enum class BoneGroup { Mandibular, Maxillary, Nasal };

const std::array<LandmarkName, kNumLandmarks>& all_landmarks();

std::string_view to_string(LandmarkName name);
std::optional<LandmarkName> parse_landmark(std::string_view text);
/// Like parse_landmark but throws ConfigError listing the valid names.
LandmarkName landmark_from_string(std::string_view text);

BoneGroup bone_group(LandmarkName name);
inline bool is_mandibular(LandmarkName name) { return bone_group(name) == BoneGroup::Mandibular; }

inline std::size_t index_of(LandmarkName name) { return static_cast<std::size_t>(name); }

/// Sorts by canonical (enumerator) order.
std::vector<LandmarkName> canonical_order(std::vector<LandmarkName> names);

/// One subject's landmark annotations in pixel space.
struct LandmarkSet {
  std::string subject_id;
  Vec3 spacing_mm{1.0, 1.0, 1.0};
  std::map<LandmarkName, Vec3> coords;

  bool has(LandmarkName name) const { return coords.contains(name); }
  /// Throws DatasetError naming the subject when the landmark is absent.
  const Vec3& at(LandmarkName name) const;

  /// Checks that all 14 landmarks are present and finite and that the
  /// spacing is strictly positive. Throws DatasetError otherwise.
  void validate() const;

  /// Pixel coordinates scaled per axis by spacing_mm.
  Vec3 to_mm(const Vec3& px) const { return px.cwiseProduct(spacing_mm); }
};

}  // namespace rrn
