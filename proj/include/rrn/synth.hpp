#pragma once

#include <map>
#include <string>

#include "rrn/dataset.hpp"
#include "rrn/rng.hpp"

namespace rrn {

/// Population model for synthetic subjects: a base shape under a random
/// similarity transform about its centroid plus Gaussian jitter.
struct SynthTemplate {
  std::map<LandmarkName, Vec3> base;  ///< pixel space
  double scale_min = 0.9;
  double scale_max = 1.1;
  double max_rotation_deg = 10.0;
  double max_translation_px = 20.0;
  double jitter_sigma_px = 2.0;  ///< per-component standard deviation
  Vec3 spacing_mm{0.5, 0.5, 0.5};

  /// Throws ConfigError on missing/non-finite landmarks, invalid ranges, or
  /// a base shape violating gross anatomy (condyles and coronoids above
  /// Menton, nasion highest).
  void validate() const;
};

/// Hand-placed adult-sized shape at 0.5 mm isotropic spacing, turned 30
/// degrees about the scanner z axis so no input pair direction sits on the
/// azimuth branch cut.
SynthTemplate default_template();

Dataset generate_synthetic(const SynthTemplate& tmpl, std::size_t count, Rng& rng,
                           const std::string& id_prefix = "synth-");

}  // namespace rrn
