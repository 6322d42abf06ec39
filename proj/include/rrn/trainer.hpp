#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rrn/dataset.hpp"
#include "rrn/experiment.hpp"
#include "rrn/folds.hpp"
#include "rrn/rrn_model.hpp"

namespace rrn {

struct EpochLog {
  std::size_t epoch = 0;  ///< 1-based
  std::size_t fold = 0;
  double train_loss = 0.0;  ///< size-weighted mean branch loss over the epoch's batches
  std::optional<double> val_loss;
  double seconds = 0.0;
};

struct TrainResult {
  RrnModel model;
  std::vector<EpochLog> log;
  std::size_t steps = 0;
};

/// First epoch whose validation loss is <= threshold, if any.
std::optional<std::size_t> epochs_to_threshold(std::span<const EpochLog> log, double threshold);
/// Smallest validation loss in the log (infinity when none was recorded).
double best_val_loss(std::span<const EpochLog> log);

/// Trains one model: normalizers fit on `train`, shuffled mini-batches, Adam,
/// branch-wise loss in normalized units (+ KL / |train| with variational
/// dropout). Validation runs in eval mode after each epoch. A trailing
/// batch of one subject is skipped since batch statistics are undefined.
/// Throws TrainingError on a non-finite loss, naming epoch and batch.
TrainResult train_model(const ExperimentConfig& config, std::span<const LandmarkSet> train,
                        std::span<const LandmarkSet> val, std::size_t fold,
                        const std::function<void(const EpochLog&)>& on_epoch = {});

struct FoldSplit {
  std::vector<LandmarkSet> train;
  std::vector<LandmarkSet> val;
  std::vector<LandmarkSet> test;
};

/// Test = non-augmented subjects of `fold`. Validation = val_fraction of the
/// remaining non-augmented subjects. Train = the rest plus augmented subjects
/// whose parent is in neither test nor validation.
FoldSplit split_fold(const Dataset& dataset, const FoldPlan& plan, std::size_t fold, double val_fraction,
                     std::uint64_t seed);

struct CrossValidation {
  Dataset dataset;  ///< input plus any augmented subjects
  FoldPlan plan;
  std::vector<FoldSplit> splits;
  std::vector<TrainResult> folds;
};

/// Fold plan, optional augmentation (sources drawn within a fold), then one
/// model per fold. Folds run on up to `threads` workers; results do not
/// depend on the thread count.
CrossValidation cross_validate(const ExperimentConfig& config, const Dataset& dataset, std::size_t threads = 1);

/// Worker count from RRN_THREADS (default 1).
std::size_t threads_from_env();

}  // namespace rrn
