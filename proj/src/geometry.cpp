#include "rrn/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "rrn/error.hpp"

namespace rrn {

SphericalVec to_spherical(const Vec3& v) {
  if (!v.allFinite()) throw InvalidInput("to_spherical: non-finite vector");
  SphericalVec s;
  s.r = v.norm();
  if (s.r > 0.0) {
    s.theta = std::acos(std::clamp(v.z() / s.r, -1.0, 1.0));
    s.phi = std::atan2(v.y(), v.x());
  }
  return s;
}

Vec3 from_spherical(const SphericalVec& s) {
  const double st = std::sin(s.theta);
  return {s.r * st * std::cos(s.phi), s.r * st * std::sin(s.phi), s.r * std::cos(s.theta)};
}

double mandible_diagonal(const LandmarkSet& set, std::span<const LandmarkName> input_mandibular) {
  if (input_mandibular.empty()) throw ConfigError("mandible_diagonal: no mandibular input landmarks");
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (auto name : input_mandibular) {
    if (!is_mandibular(name)) {
      throw ConfigError("mandible_diagonal: " + std::string(to_string(name)) + " is not a mandibular landmark");
    }
    const Vec3& p = set.at(name);
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

}  // namespace rrn
