#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "json.hpp"
#include "rrn/dataset.hpp"
#include "rrn/experiment.hpp"
#include "rrn/metrics.hpp"
#include "rrn/trainer.hpp"

namespace rrn {

struct RegimeResult {
  DropoutMode mode = DropoutMode::Regular;
  std::optional<std::size_t> epochs_to_threshold;
  double best_val_loss = 0.0;
  double final_train_loss = 0.0;
  double final_val_loss = 0.0;
  double mean_error_mm = 0.0;  ///< mean over targets of the test mean error
  double seconds = 0.0;
  std::vector<EpochLog> log;
};

struct DropoutComparison {
  double threshold = 0.0;            ///< factor * the largest best-validation-loss among regimes
  std::vector<RegimeResult> rows;    ///< regular, variational, targeted
};

/// Trains the base config once per dropout regime on the same fold-0 split
/// with the same seed.
DropoutComparison compare_dropout(const ExperimentConfig& base, const Dataset& dataset);

/// `regime,epochs_to_threshold,best_val_loss,final_train_loss,final_val_loss,mean_error_mm,threshold`.
void write_comparison_csv(const DropoutComparison& cmp, std::ostream& out);
nlohmann::json to_json(const DropoutComparison& cmp);

struct PresetRun {
  CrossValidation cv;
  MetricsReport report;
};

/// Cross-validates, evaluates each fold on its held-out subjects and writes
/// metrics.csv, errors.csv, log.jsonl, summary.json and checkpoints/fold-K.cbor
/// into `out_dir`.
PresetRun run_preset(const ExperimentConfig& config, const Dataset& dataset, const std::filesystem::path& out_dir,
                     std::size_t threads = 1);

/// Looks the preset up by name (ConfigError listing valid names), loads the
/// dataset, then runs it.
PresetRun run_preset(const std::string& name, const std::filesystem::path& dataset_path,
                     const std::filesystem::path& out_dir, std::uint64_t seed = 0);

void write_log_jsonl(std::span<const EpochLog> log, std::ostream& out);

}  // namespace rrn
