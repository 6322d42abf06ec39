#pragma once

#include <span>
#include <string>

#include "rrn/dataset.hpp"
#include "rrn/folds.hpp"
#include "rrn/rng.hpp"

namespace rrn {

inline constexpr double kAugmentNoisePx = 5.0;

/// Interpolates 2 or 3 landmark sets: each landmark becomes the weighted sum
/// of the sources plus independent uniform noise in [-noise_bound,
/// noise_bound] per component (noise_bound = 0 disables noise). The spacing
/// is copied from the highest-weight source. Throws InvalidInput on a wrong
/// source count, negative weights or weights not summing to 1 (1e-9).
LandmarkSet augment(std::span<const LandmarkSet* const> sources, std::span<const double> weights,
                    double noise_bound, Rng& rng, std::string subject_id = "augmented");

/// Index of the first maximal weight.
std::size_t max_weight_index(std::span<const double> weights);

struct AugmentOptions {
  double noise_bound = kAugmentNoisePx;
  /// When set, all sources of one sample come from a single fold.
  const FoldPlan* folds = nullptr;
  std::string id_prefix = "aug-";
};

/// Appends `count` interpolated subjects. Sources (2 or 3, chosen uniformly)
/// are drawn uniformly from the non-augmented subjects, weights from
/// Dirichlet(1, ..., 1); parent_id records the max-weight source. Throws
/// ConfigError with fewer than 2 usable sources.
Dataset generate_augmented(const Dataset& dataset, std::size_t count, Rng& rng, const AugmentOptions& options = {});

}  // namespace rrn
