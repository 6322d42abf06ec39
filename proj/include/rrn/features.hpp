#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "rrn/landmarks.hpp"

namespace rrn {

inline constexpr std::size_t kFeatureDim = 19;

/// Geometric descriptor of an ordered landmark pair (A, B):
///
///   [0..2]   A in pixel space
///   [3..5]   spherical (r, theta, phi) of A - Me
///   [6..8]   B in pixel space
///   [9..11]  spherical of B - Me
///   [12..14] Me in pixel space
///   [15..17] spherical of B - A
///   [18]     mandible bounding-box diagonal d1
using PairwiseFeature = std::array<double, kFeatureDim>;

/// Throws InvalidInput when a == b, DatasetError when a, b or Me is absent.
PairwiseFeature pairwise_features(const LandmarkSet& set, LandmarkName a, LandmarkName b, double d1);

struct PairRow {
  LandmarkName a;
  LandmarkName b;
  PairwiseFeature values;
};

/// Features of all n(n-1) ordered input pairs, sorted by (name of a, name of
/// b) as strings. d1 is taken over the mandibular members of `inputs`.
std::vector<PairRow> pairwise_table(const LandmarkSet& set, std::span<const LandmarkName> inputs);

/// Per-component affine standardization, y = (x - shift) * scale.
class AffineNormalizer {
 public:
  static constexpr double kStdFloor = 1e-8;

  AffineNormalizer() = default;
  /// Identity transform of the given width.
  explicit AffineNormalizer(std::size_t dim);
  AffineNormalizer(std::vector<double> shift, std::vector<double> scale);

  /// Fits mean 0 / std 1 per component (population std, floored). Every row
  /// must have the same width; throws InvalidInput on an empty collection.
  static AffineNormalizer fit(std::span<const std::vector<double>> rows);
  static AffineNormalizer fit_features(std::span<const PairwiseFeature> rows);

  std::size_t dim() const { return shift_.size(); }
  const std::vector<double>& shift() const { return shift_; }
  const std::vector<double>& scale() const { return scale_; }

  void apply(std::span<double> values) const;
  void invert(std::span<double> values) const;

 private:
  std::vector<double> shift_;
  std::vector<double> scale_;
};

/// Fits the standardization of a set of pairwise features.
inline AffineNormalizer feature_normalizer(std::span<const PairwiseFeature> train_features) {
  return AffineNormalizer::fit_features(train_features);
}

}  // namespace rrn
