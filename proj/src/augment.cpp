#include "rrn/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "rrn/error.hpp"

namespace rrn {

std::size_t max_weight_index(std::span<const double> weights) {
  return static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) - weights.begin());
}

LandmarkSet augment(std::span<const LandmarkSet* const> sources, std::span<const double> weights,
                    double noise_bound, Rng& rng, std::string subject_id) {
  if (sources.size() < 2 || sources.size() > 3) {
    throw InvalidInput("augment: expected 2 or 3 source sets, got " + std::to_string(sources.size()));
  }
  if (weights.size() != sources.size()) throw InvalidInput("augment: one weight per source required");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("augment: weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("augment: weights sum to " + std::to_string(sum) + ", not 1");
  if (noise_bound < 0.0) throw InvalidInput("augment: negative noise bound");

  LandmarkSet out;
  out.subject_id = std::move(subject_id);
  out.spacing_mm = sources[max_weight_index(weights)]->spacing_mm;
  std::uniform_real_distribution<double> noise(-noise_bound, noise_bound);
  for (const auto& [name, unused] : sources.front()->coords) {
    Vec3 p = Vec3::Zero();
    for (std::size_t s = 0; s < sources.size(); ++s) p += weights[s] * sources[s]->at(name);
    if (noise_bound > 0.0) {
      for (int c = 0; c < 3; ++c) p[c] += noise(rng);
    }
    out.coords[name] = p;
  }
  for (std::size_t s = 1; s < sources.size(); ++s) {
    if (sources[s]->coords.size() != sources.front()->coords.size()) {
      throw InvalidInput("augment: source sets do not share landmark names");
    }
  }
  return out;
}

Dataset generate_augmented(const Dataset& dataset, std::size_t count, Rng& rng, const AugmentOptions& options) {
  Dataset out = dataset;
  if (count == 0) return out;
  const auto base = dataset.base_indices();
  if (base.size() < 2) throw ConfigError("augmentation needs at least 2 non-augmented subjects");

  std::map<std::size_t, std::vector<std::size_t>> by_fold;
  if (options.folds) {
    for (auto i : base) by_fold[options.folds->fold_of(dataset[i])].push_back(i);
    for (const auto& [fold, members] : by_fold) {
      if (members.size() < 2) {
        throw ConfigError("fold " + std::to_string(fold) + " has fewer than 2 subjects to interpolate");
      }
    }
  }

  std::exponential_distribution<double> expo(1.0);
  std::size_t serial = 0;
  for (std::size_t made = 0; made < count; ++made) {
    const std::vector<std::size_t>* pool = &base;
    if (options.folds) {
      std::uniform_int_distribution<std::size_t> pick_first(0, base.size() - 1);
      pool = &by_fold.at(options.folds->fold_of(dataset[base[pick_first(rng)]]));
    }
    std::uniform_int_distribution<int> pick_k(2, 3);
    const std::size_t k = std::min<std::size_t>(pick_k(rng), pool->size());

    std::vector<std::size_t> chosen = *pool;
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, chosen.size() - 1);
      std::swap(chosen[i], chosen[pick(rng)]);
    }
    chosen.resize(k);

    std::vector<double> weights(k);
    double total = 0.0;
    for (auto& w : weights) total += (w = expo(rng));
    for (auto& w : weights) w /= total;

    std::vector<const LandmarkSet*> sources;
    for (auto i : chosen) sources.push_back(&dataset[i].landmarks);

    std::string id;
    do {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%06zu", serial++);
      id = options.id_prefix + buf;
    } while (out.find(id));

    Subject s;
    s.landmarks = augment(sources, weights, options.noise_bound, rng, id);
    s.provenance = Provenance::Augmented;
    s.parent_id = sources[max_weight_index(weights)]->subject_id;
    out.add(std::move(s));
  }
  return out;
}

}  // namespace rrn
