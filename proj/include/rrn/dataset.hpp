#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "rrn/landmarks.hpp"

namespace rrn {

enum class Provenance { Real, Augmented, Synthetic };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct Subject {
  LandmarkSet landmarks;
  Provenance provenance = Provenance::Real;
  std::string parent_id;  ///< max-weight source of an augmented subject
};

/// Collection of validated subjects with unique ids.
class Dataset {
 public:
  Dataset() = default;

  void add(Subject subject);
  std::size_t size() const { return subjects_.size(); }
  bool empty() const { return subjects_.empty(); }
  const Subject& operator[](std::size_t i) const { return subjects_[i]; }
  const std::vector<Subject>& subjects() const { return subjects_; }

  const Subject* find(std::string_view id) const;
  std::vector<LandmarkSet> landmark_sets() const;
  /// Subjects that can seed augmentation, folds and evaluation (not augmented).
  std::vector<std::size_t> base_indices() const;

 private:
  std::vector<Subject> subjects_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads the dataset JSON format. Throws LoadError naming the subject and
/// field on missing landmarks, duplicate ids or invalid spacing.
Dataset load_dataset(const std::filesystem::path& path);
Dataset dataset_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Dataset& dataset);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace rrn
