#include "rrn/folds.hpp"

#include <algorithm>

#include "rrn/error.hpp"
#include "rrn/rng.hpp"

namespace rrn {

std::size_t FoldPlan::fold_of(const Subject& subject) const {
  const std::string& key =
      subject.provenance == Provenance::Augmented ? subject.parent_id : subject.landmarks.subject_id;
  auto it = assignments.find(key);
  if (it == assignments.end()) {
    throw DatasetError("subject '" + subject.landmarks.subject_id + "' has no fold assignment");
  }
  return it->second;
}

void FoldPlan::assign_children(const Dataset& dataset) {
  for (const auto& s : dataset.subjects()) {
    if (s.provenance == Provenance::Augmented) assignments[s.landmarks.subject_id] = fold_of(s);
  }
}

FoldPlan make_folds(const Dataset& dataset, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross-validation needs k >= 2 folds, got " + std::to_string(k));
  auto base = dataset.base_indices();
  if (base.size() < k) {
    throw ConfigError("cannot split " + std::to_string(base.size()) + " subjects into " + std::to_string(k) +
                      " folds");
  }
  Rng rng(derive_seed(seed, {0xf01d}));
  std::shuffle(base.begin(), base.end(), rng);
  FoldPlan plan;
  plan.k = k;
  for (std::size_t i = 0; i < base.size(); ++i) plan.assignments[dataset[base[i]].landmarks.subject_id] = i % k;
  plan.assign_children(dataset);
  return plan;
}

}  // namespace rrn
