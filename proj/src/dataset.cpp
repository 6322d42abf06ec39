#include "rrn/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "rrn/error.hpp"

namespace rrn {
namespace {

Vec3 read_vec3(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw LoadError(where + ": expected an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw LoadError(where + ": expected an array of 3 numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

nlohmann::json write_vec3(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Real: return "real";
    case Provenance::Augmented: return "augmented";
    case Provenance::Synthetic: return "synthetic";
  }
  return "real";
}

Provenance provenance_from_string(std::string_view s) {
  for (auto p : {Provenance::Real, Provenance::Augmented, Provenance::Synthetic}) {
    if (to_string(p) == s) return p;
  }
  throw LoadError("unknown provenance '" + std::string(s) + "'");
}

void Dataset::add(Subject subject) {
  subject.landmarks.validate();
  if (find(subject.landmarks.subject_id)) {
    throw DatasetError("duplicate subject id '" + subject.landmarks.subject_id + "'");
  }
  index_.emplace(subject.landmarks.subject_id, subjects_.size());
  subjects_.push_back(std::move(subject));
}

const Subject* Dataset::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &subjects_[it->second];
}

std::vector<LandmarkSet> Dataset::landmark_sets() const {
  std::vector<LandmarkSet> out;
  out.reserve(subjects_.size());
  for (const auto& s : subjects_) out.push_back(s.landmarks);
  return out;
}

std::vector<std::size_t> Dataset::base_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    if (subjects_[i].provenance != Provenance::Augmented) out.push_back(i);
  }
  return out;
}

Dataset dataset_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("subjects") || !j.at("subjects").is_array()) {
    throw LoadError("dataset: top-level 'subjects' array missing");
  }
  Dataset ds;
  std::set<std::string> ids;
  std::size_t index = 0;
  for (const auto& entry : j.at("subjects")) {
    const std::string fallback = "#" + std::to_string(index++);
    if (!entry.is_object() || !entry.contains("id") || !entry.at("id").is_string()) {
      throw LoadError("subject " + fallback + ": field 'id' missing or not a string");
    }
    Subject s;
    s.landmarks.subject_id = entry.at("id").get<std::string>();
    const std::string where = "subject '" + s.landmarks.subject_id + "'";
    if (!ids.insert(s.landmarks.subject_id).second) throw LoadError(where + ": duplicate id");
    if (!entry.contains("spacing_mm")) throw LoadError(where + ": field 'spacing_mm' missing");
    s.landmarks.spacing_mm = read_vec3(entry.at("spacing_mm"), where + " field 'spacing_mm'");
    for (int a = 0; a < 3; ++a) {
      if (!(s.landmarks.spacing_mm[a] > 0.0) || !std::isfinite(s.landmarks.spacing_mm[a])) {
        throw LoadError(where + ": field 'spacing_mm' must be strictly positive");
      }
    }
    if (!entry.contains("landmarks") || !entry.at("landmarks").is_object()) {
      throw LoadError(where + ": field 'landmarks' missing");
    }
    for (const auto& [key, value] : entry.at("landmarks").items()) {
      auto name = parse_landmark(key);
      if (!name) throw LoadError(where + ": unknown landmark '" + key + "'");
      s.landmarks.coords[*name] = read_vec3(value, where + " landmark '" + key + "'");
      if (!s.landmarks.coords[*name].allFinite()) throw LoadError(where + ": landmark '" + key + "' is not finite");
    }
    for (auto name : all_landmarks()) {
      if (!s.landmarks.has(name)) {
        throw LoadError(where + ": missing landmark '" + std::string(to_string(name)) + "'");
      }
    }
    if (entry.contains("provenance")) s.provenance = provenance_from_string(entry.at("provenance").get<std::string>());
    if (entry.contains("parent")) s.parent_id = entry.at("parent").get<std::string>();
    ds.add(std::move(s));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open dataset file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError("dataset file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return dataset_from_json(j);
}

nlohmann::json to_json(const Dataset& dataset) {
  nlohmann::json subjects = nlohmann::json::array();
  for (const auto& s : dataset.subjects()) {
    nlohmann::json landmarks = nlohmann::json::object();
    for (auto name : all_landmarks()) landmarks[std::string(to_string(name))] = write_vec3(s.landmarks.at(name));
    nlohmann::json entry = {{"id", s.landmarks.subject_id},
                            {"spacing_mm", write_vec3(s.landmarks.spacing_mm)},
                            {"landmarks", landmarks},
                            {"provenance", to_string(s.provenance)}};
    if (!s.parent_id.empty()) entry["parent"] = s.parent_id;
    subjects.push_back(std::move(entry));
  }
  return {{"subjects", subjects}};
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write dataset file '" + path.string() + "'");
  out << to_json(dataset).dump(1) << '\n';
}

}  // namespace rrn
