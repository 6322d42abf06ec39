#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rrn/rrn_model.hpp"

namespace rrn {

/// Euclidean error of one predicted landmark of one test subject.
struct SubjectError {
  std::size_t fold = 0;
  std::string subject;
  LandmarkName landmark = LandmarkName::Me;
  double error_mm = 0.0;
};

/// Aggregate over subjects. std_mm is the sample standard deviation (0 for a
/// single subject); rmse_mm = sqrt(mean(error^2)).
struct LandmarkMetrics {
  std::optional<std::size_t> fold;  ///< nullopt for the pooled row
  LandmarkName landmark = LandmarkName::Me;
  double mean_mm = 0.0;
  double std_mm = 0.0;
  double rmse_mm = 0.0;
  std::size_t n_subjects = 0;
};

struct MetricsReport {
  std::string preset;
  std::vector<LandmarkName> targets;
  std::vector<SubjectError> errors;
  std::vector<LandmarkMetrics> rows;  ///< per fold then pooled, targets in config order
  std::size_t skipped_subjects = 0;   ///< test subjects lacking a target landmark
  std::vector<std::optional<std::size_t>> epochs_to_threshold;  ///< per fold
  double seconds = 0.0;

  /// Rebuilds `rows` from `errors`.
  void aggregate();
};

/// Errors of terminal predictions against the matching truth subjects.
MetricsReport report_from_predictions(const std::string& preset, const std::vector<LandmarkName>& targets,
                                      std::span<const LandmarkSet> truth, std::span<const Prediction> predictions,
                                      std::size_t fold = 0);

/// Terminal-prediction errors in mm on test subjects. Subjects missing a
/// target or input landmark are skipped and counted.
MetricsReport evaluate(RrnModel& model, std::span<const LandmarkSet> test, const std::string& preset,
                       std::size_t fold = 0);

/// Concatenates per-fold reports and re-aggregates.
MetricsReport merge_reports(std::span<const MetricsReport> reports);

/// `preset,fold,landmark,mean_mm,std_mm,rmse_mm,n_subjects`; fold is "all" for pooled rows.
void write_metrics_csv(const MetricsReport& report, std::ostream& out);
/// `preset,fold,subject,landmark,error_mm`.
void write_errors_csv(const MetricsReport& report, std::ostream& out);

}  // namespace rrn
