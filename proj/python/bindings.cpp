#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rrn/checkpoint.hpp"
#include "rrn/dataset.hpp"
#include "rrn/error.hpp"
#include "rrn/experiment.hpp"
#include "rrn/features.hpp"
#include "rrn/geometry.hpp"
#include "rrn/runner.hpp"
#include "rrn/synth.hpp"

namespace py = pybind11;
using namespace rrn;

namespace {

using Coords = std::map<std::string, std::array<double, 3>>;

LandmarkSet to_set(const Coords& coords, const std::array<double, 3>& spacing, const std::string& id) {
  LandmarkSet s;
  s.subject_id = id;
  s.spacing_mm = Vec3(spacing[0], spacing[1], spacing[2]);
  for (const auto& [name, p] : coords) s.coords[landmark_from_string(name)] = Vec3(p[0], p[1], p[2]);
  return s;
}

Coords to_coords(const std::map<LandmarkName, Vec3>& m) {
  Coords out;
  for (const auto& [n, p] : m) out[std::string(to_string(n))] = {p.x(), p.y(), p.z()};
  return out;
}

py::list subjects(const Dataset& d) {
  py::list out;
  for (const auto& s : d.subjects()) {
    py::dict item;
    item["id"] = s.landmarks.subject_id;
    item["spacing"] = std::array<double, 3>{s.landmarks.spacing_mm.x(), s.landmarks.spacing_mm.y(),
                                            s.landmarks.spacing_mm.z()};
    item["landmarks"] = to_coords(s.landmarks.coords);
    item["provenance"] = std::string(to_string(s.provenance));
    out.append(item);
  }
  return out;
}

std::vector<LandmarkName> names(const std::vector<std::string>& v) {
  std::vector<LandmarkName> out;
  for (const auto& s : v) out.push_back(landmark_from_string(s));
  return out;
}

std::vector<std::string> strings(std::span<const LandmarkName> v) {
  std::vector<std::string> out;
  for (auto n : v) out.emplace_back(to_string(n));
  return out;
}

}  // namespace

PYBIND11_MODULE(_rrn, m) {
  m.doc() = "Relational reasoning network for 3-D landmark prediction";

  py::register_exception<Error>(m, "RrnError", PyExc_RuntimeError);

  m.def("landmark_names", [] { return strings(all_landmarks()); }, "All 14 landmarks in canonical order.");
  m.def("preset_names", &preset_names);
  m.def(
      "relation_unit_count", [](const std::string& name) { return RrnModel::build(preset(name).rrn, 0).relation_unit_count(); },
      py::arg("preset"));

  m.def(
      "to_spherical",
      [](const std::array<double, 3>& v) {
        const auto s = to_spherical(Vec3(v[0], v[1], v[2]));
        return std::array<double, 3>{s.r, s.theta, s.phi};
      },
      py::arg("v"), "(r, theta, phi) with theta the polar angle from +z.");

  m.def(
      "pairwise_table",
      [](const Coords& coords, const std::vector<std::string>& inputs) {
        const auto set = to_set(coords, {1.0, 1.0, 1.0}, "python");
        const auto in = names(inputs);
        std::vector<std::tuple<std::string, std::string, std::vector<double>>> out;
        for (const auto& row : pairwise_table(set, in)) {
          out.emplace_back(std::string(to_string(row.a)), std::string(to_string(row.b)),
                           std::vector<double>(row.values.begin(), row.values.end()));
        }
        return out;
      },
      py::arg("landmarks"), py::arg("inputs"), "19-value feature rows for every ordered input pair.");

  m.def(
      "synthetic",
      [](std::size_t count, std::uint64_t seed) {
        Rng rng(seed);
        return subjects(generate_synthetic(default_template(), count, rng));
      },
      py::arg("count"), py::arg("seed") = 0);
  m.def(
      "generate_dataset",
      [](const std::filesystem::path& path, std::size_t count, std::uint64_t seed) {
        Rng rng(derive_seed(seed, {0x5e}));
        save_dataset(generate_synthetic(default_template(), count, rng), path);
      },
      py::arg("path"), py::arg("count"), py::arg("seed") = 0);
  m.def(
      "load_dataset", [](const std::filesystem::path& path) { return subjects(load_dataset(path)); }, py::arg("path"));

  py::class_<RrnModel>(m, "Model")
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def("save", [](RrnModel& self, const std::filesystem::path& p) { save_checkpoint(self, p); }, py::arg("path"))
      .def_property_readonly("inputs", [](const RrnModel& self) { return strings(self.inputs()); })
      .def_property_readonly("targets", [](const RrnModel& self) { return strings(self.config().target_names); })
      .def_property_readonly("relation_unit_count", &RrnModel::relation_unit_count)
      .def(
          "predict",
          [](RrnModel& self, const Coords& coords, const std::array<double, 3>& spacing) {
            const auto p = self.predict(to_set(coords, spacing, "python"));
            Coords out;
            for (std::size_t k = 0; k < p.targets.size(); ++k) {
              out[std::string(to_string(p.targets[k]))] = {p.terminal[k].x(), p.terminal[k].y(), p.terminal[k].z()};
            }
            return out;
          },
          py::arg("landmarks"), py::arg("spacing") = std::array<double, 3>{1.0, 1.0, 1.0},
          "Terminal prediction in pixels for each target landmark.");

  m.def(
      "run_preset",
      [](const std::string& name, const std::filesystem::path& data, const std::filesystem::path& out,
         std::uint64_t seed) {
        py::gil_scoped_release release;
        const auto run = run_preset(name, data, out, seed);
        std::map<std::string, double> mean;
        for (const auto& row : run.report.rows) {
          if (!row.fold) mean[std::string(to_string(row.landmark))] = row.mean_mm;
        }
        return mean;
      },
      py::arg("name"), py::arg("data"), py::arg("out"), py::arg("seed") = 0,
      "Cross-validated experiment; returns pooled mean error in mm per target.");
}
