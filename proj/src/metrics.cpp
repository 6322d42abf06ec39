#include "rrn/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "rrn/error.hpp"

namespace rrn {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

LandmarkMetrics summarize(std::optional<std::size_t> fold, LandmarkName landmark, const std::vector<double>& errs) {
  LandmarkMetrics m;
  m.fold = fold;
  m.landmark = landmark;
  m.n_subjects = errs.size();
  if (errs.empty()) return m;
  double sum = 0.0;
  double sq = 0.0;
  for (double e : errs) {
    sum += e;
    sq += e * e;
  }
  const double n = static_cast<double>(errs.size());
  m.mean_mm = sum / n;
  m.rmse_mm = std::sqrt(sq / n);
  if (errs.size() > 1) {
    double var = 0.0;
    for (double e : errs) var += (e - m.mean_mm) * (e - m.mean_mm);
    m.std_mm = std::sqrt(var / (n - 1.0));
  }
  return m;
}

}  // namespace

void MetricsReport::aggregate() {
  rows.clear();
  std::map<std::size_t, std::map<LandmarkName, std::vector<double>>> per_fold;
  std::map<LandmarkName, std::vector<double>> pooled;
  for (const auto& e : errors) {
    per_fold[e.fold][e.landmark].push_back(e.error_mm);
    pooled[e.landmark].push_back(e.error_mm);
  }
  for (const auto& [fold, by_landmark] : per_fold) {
    for (auto t : targets) {
      auto it = by_landmark.find(t);
      rows.push_back(summarize(fold, t, it == by_landmark.end() ? std::vector<double>{} : it->second));
    }
  }
  for (auto t : targets) rows.push_back(summarize(std::nullopt, t, pooled[t]));
}

MetricsReport report_from_predictions(const std::string& preset, const std::vector<LandmarkName>& targets,
                                      std::span<const LandmarkSet> truth, std::span<const Prediction> predictions,
                                      std::size_t fold) {
  if (truth.size() != predictions.size()) throw InvalidInput("one prediction per truth subject is required");
  MetricsReport report;
  report.preset = preset;
  report.targets = targets;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto& s = truth[i];
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const Vec3 diff = s.to_mm(predictions[i].terminal.at(k)) - s.to_mm(s.at(targets[k]));
      report.errors.push_back({fold, s.subject_id, targets[k], diff.norm()});
    }
  }
  report.aggregate();
  return report;
}

MetricsReport evaluate(RrnModel& model, std::span<const LandmarkSet> test, const std::string& preset,
                       std::size_t fold) {
  const auto& targets = model.config().target_names;
  std::vector<LandmarkSet> usable;
  std::size_t skipped = 0;
  for (const auto& s : test) {
    bool complete = true;
    for (auto t : targets) complete = complete && s.has(t);
    for (auto i : model.inputs()) complete = complete && s.has(i);
    if (complete) {
      usable.push_back(s);
    } else {
      ++skipped;
    }
  }
  const auto predictions = model.predict(usable);
  auto report = report_from_predictions(preset, targets, usable, predictions, fold);
  report.skipped_subjects = skipped;
  return report;
}

MetricsReport merge_reports(std::span<const MetricsReport> reports) {
  MetricsReport out;
  if (reports.empty()) return out;
  out.preset = reports.front().preset;
  out.targets = reports.front().targets;
  for (const auto& r : reports) {
    out.errors.insert(out.errors.end(), r.errors.begin(), r.errors.end());
    out.skipped_subjects += r.skipped_subjects;
    out.epochs_to_threshold.insert(out.epochs_to_threshold.end(), r.epochs_to_threshold.begin(),
                                   r.epochs_to_threshold.end());
    out.seconds += r.seconds;
  }
  out.aggregate();
  return out;
}

void write_metrics_csv(const MetricsReport& report, std::ostream& out) {
  out << "preset,fold,landmark,mean_mm,std_mm,rmse_mm,n_subjects\n";
  for (const auto& r : report.rows) {
    out << report.preset << ',' << (r.fold ? std::to_string(*r.fold) : std::string("all")) << ','
        << to_string(r.landmark) << ',' << fmt(r.mean_mm) << ',' << fmt(r.std_mm) << ',' << fmt(r.rmse_mm) << ','
        << r.n_subjects << '\n';
  }
}

void write_errors_csv(const MetricsReport& report, std::ostream& out) {
  out << "preset,fold,subject,landmark,error_mm\n";
  for (const auto& e : report.errors) {
    out << report.preset << ',' << e.fold << ',' << e.subject << ',' << to_string(e.landmark) << ','
        << fmt(e.error_mm) << '\n';
  }
}

}  // namespace rrn
