#include "rrn/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include <Eigen/Geometry>

#include "rrn/error.hpp"

namespace rrn {

void SynthTemplate::validate() const {
  for (auto name : all_landmarks()) {
    auto it = base.find(name);
    if (it == base.end() || !it->second.allFinite()) {
      throw ConfigError("synthetic template: landmark " + std::string(to_string(name)) + " missing or not finite");
    }
  }
  if (!(scale_min > 0.0 && scale_min <= scale_max)) throw ConfigError("synthetic template: invalid scale range");
  if (!(max_rotation_deg >= 0.0 && max_translation_px >= 0.0 && jitter_sigma_px >= 0.0)) {
    throw ConfigError("synthetic template: negative deformation parameter");
  }
  if (!(spacing_mm.array() > 0.0).all()) throw ConfigError("synthetic template: spacing must be positive");
  const double me_z = base.at(LandmarkName::Me).z();
  for (auto n : {LandmarkName::CdL, LandmarkName::CdR, LandmarkName::CorL, LandmarkName::CorR}) {
    if (!(base.at(n).z() > me_z)) {
      throw ConfigError("synthetic template: " + std::string(to_string(n)) + " must lie above Me");
    }
  }
  const double na_z = base.at(LandmarkName::Na).z();
  for (const auto& [name, p] : base) {
    if (name != LandmarkName::Na && !(p.z() < na_z)) throw ConfigError("synthetic template: Na must be highest");
  }
}

SynthTemplate default_template() {
  // Anatomical frame in mm relative to Menton: x patient-left, y posterior,
  // z superior.
  const std::map<LandmarkName, Vec3> anatomy_mm = {
      {LandmarkName::Me, {0, 0, 0}},      {LandmarkName::Gn, {0, -3, 4}},     {LandmarkName::Pg, {0, -5, 9}},
      {LandmarkName::B, {0, -3, 18}},     {LandmarkName::Id, {0, -4, 30}},    {LandmarkName::CorL, {45, 55, 55}},
      {LandmarkName::CorR, {-45, 55, 55}}, {LandmarkName::CdL, {50, 75, 62}}, {LandmarkName::CdR, {-50, 75, 62}},
      {LandmarkName::Ans, {0, -4, 58}},   {LandmarkName::A, {0, 0, 50}},      {LandmarkName::Pr, {0, -5, 40}},
      {LandmarkName::Pns, {0, 45, 60}},   {LandmarkName::Na, {0, 5, 110}},
  };
  SynthTemplate t;
  const Eigen::Matrix3d turn = Eigen::AngleAxisd(std::numbers::pi / 6.0, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Vec3 origin(256.0, 256.0, 160.0);
  for (const auto& [name, p] : anatomy_mm) t.base[name] = origin + turn * p.cwiseQuotient(t.spacing_mm);
  return t;
}

Dataset generate_synthetic(const SynthTemplate& tmpl, std::size_t count, Rng& rng, const std::string& id_prefix) {
  tmpl.validate();
  Vec3 centroid = Vec3::Zero();
  for (const auto& [name, p] : tmpl.base) centroid += p;
  centroid /= static_cast<double>(tmpl.base.size());

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double max_angle = tmpl.max_rotation_deg * std::numbers::pi / 180.0;

  Dataset out;
  for (std::size_t i = 0; i < count; ++i) {
    Vec3 axis(normal(rng), normal(rng), normal(rng));
    axis.normalize();
    const double angle = max_angle * unit(rng);
    const double scale = tmpl.scale_min + (tmpl.scale_max - tmpl.scale_min) * unit(rng);
    Vec3 dir(normal(rng), normal(rng), normal(rng));
    dir.normalize();
    const Vec3 shift = dir * (tmpl.max_translation_px * unit(rng));
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();

    Subject s;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05zu", i);
    s.landmarks.subject_id = id_prefix + buf;
    s.landmarks.spacing_mm = tmpl.spacing_mm;
    for (const auto& [name, p] : tmpl.base) {
      Vec3 q = centroid + scale * (rot * (p - centroid)) + shift;
      if (tmpl.jitter_sigma_px > 0.0) {
        for (int c = 0; c < 3; ++c) q[c] += tmpl.jitter_sigma_px * normal(rng);
      }
      s.landmarks.coords[name] = q;
    }
    s.provenance = Provenance::Synthetic;
    out.add(std::move(s));
  }
  return out;
}

}  // namespace rrn
