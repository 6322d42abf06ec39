#pragma once

#include <span>

#include "rrn/landmarks.hpp"

namespace rrn {

/// Physics convention: theta is the polar angle from +z, phi the azimuth
/// from +x towards +y. A zero vector maps to (0, 0, 0).
struct SphericalVec {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

/// Throws InvalidInput on non-finite components.
SphericalVec to_spherical(const Vec3& v);
Vec3 from_spherical(const SphericalVec& s);

/// Diagonal of the axis-aligned bounding box around the listed mandibular
/// landmarks, in pixels. Throws ConfigError if the list is empty or holds a
/// non-mandibular name, DatasetError if a landmark is absent.
double mandible_diagonal(const LandmarkSet& set, std::span<const LandmarkName> input_mandibular);

}  // namespace rrn
