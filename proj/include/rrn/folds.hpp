#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "rrn/dataset.hpp"

namespace rrn {

/// Cross-validation partition. Augmented subjects carry their max-weight
/// parent's fold.
struct FoldPlan {
  std::size_t k = 0;
  std::map<std::string, std::size_t> assignments;

  /// Fold of a subject; augmented subjects resolve through parent_id.
  std::size_t fold_of(const Subject& subject) const;
  /// Records the fold of every augmented subject in `dataset`.
  void assign_children(const Dataset& dataset);
};

/// Balanced random partition of the non-augmented subjects. Throws
/// ConfigError when k < 2 or there are fewer than k such subjects.
FoldPlan make_folds(const Dataset& dataset, std::size_t k, std::uint64_t seed);

}  // namespace rrn
