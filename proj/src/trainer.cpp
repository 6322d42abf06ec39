#include "rrn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <thread>
#include <atomic>

#include "rrn/augment.hpp"
#include "rrn/error.hpp"

namespace rrn {

std::optional<std::size_t> epochs_to_threshold(std::span<const EpochLog> log, double threshold) {
  for (const auto& e : log) {
    if (e.val_loss && *e.val_loss <= threshold) return e.epoch;
  }
  return std::nullopt;
}

double best_val_loss(std::span<const EpochLog> log) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : log) {
    if (e.val_loss) best = std::min(best, *e.val_loss);
  }
  return best;
}

TrainResult train_model(const ExperimentConfig& config, std::span<const LandmarkSet> train,
                        std::span<const LandmarkSet> val, std::size_t fold,
                        const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (train.size() < 2) throw ConfigError("fold " + std::to_string(fold) + ": fewer than 2 training subjects");

  TrainResult result{RrnModel::build(config.rrn, derive_seed(config.seed, {fold, 0})), {}, 0};
  RrnModel& model = result.model;
  model.fit_normalizers(train);
  const EncodedSet train_enc = model.encode(train, true);
  const EncodedSet val_enc = model.encode(val, true);
  const bool variational = config.rrn.dropout.mode == DropoutMode::Variational;
  const double kl_scale = 1.0 / static_cast<double>(train.size());

  Rng shuffle_rng(derive_seed(config.seed, {fold, 1}));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> val_rows(val.size());
  std::iota(val_rows.begin(), val_rows.end(), std::size_t{0});

  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<Tensor> grads;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    std::size_t batch_id = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_id) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      if (end - begin < 2) continue;
      const std::span<const std::size_t> rows(order.data() + begin, end - begin);
      RowMatrix truth(Eigen::Index(rows.size()), train_enc.targets.cols());
      for (std::size_t i = 0; i < rows.size(); ++i) truth.row(Eigen::Index(i)) = train_enc.targets.row(Eigen::Index(rows[i]));

      model.params().zero_grad();
      const auto branches = model.forward(train_enc, rows, Mode::Train);
      const double data_loss = branch_loss(branches, truth, &grads);
      if (!std::isfinite(data_loss)) {
        throw TrainingError("non-finite loss in fold " + std::to_string(fold) + ", epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_id));
      }
      model.backward(grads);
      if (variational) model.regularize(kl_scale);
      adam_step(model.params(), config.adam);
      ++result.steps;
      loss_sum += data_loss * static_cast<double>(rows.size());
      seen += rows.size();
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.fold = fold;
    entry.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    if (!val.empty()) {
      const auto branches = model.forward(val_enc, val_rows, Mode::Eval);
      entry.val_loss = branch_loss(branches, val_enc.targets, nullptr);
    }
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (config.patience > 0 && entry.val_loss) {
      if (*entry.val_loss < best) {
        best = *entry.val_loss;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        break;
      }
    }
  }
  return result;
}

FoldSplit split_fold(const Dataset& dataset, const FoldPlan& plan, std::size_t fold, double val_fraction,
                     std::uint64_t seed) {
  FoldSplit split;
  std::vector<std::size_t> train_base;
  for (auto i : dataset.base_indices()) {
    if (plan.fold_of(dataset[i]) == fold) {
      split.test.push_back(dataset[i].landmarks);
    } else {
      train_base.push_back(i);
    }
  }
  Rng rng(derive_seed(seed, {fold, 2}));
  std::shuffle(train_base.begin(), train_base.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(train_base.size())));
  std::set<std::string> held_out;
  for (std::size_t k = 0; k < train_base.size(); ++k) {
    const auto& s = dataset[train_base[k]].landmarks;
    if (k < n_val) {
      split.val.push_back(s);
      held_out.insert(s.subject_id);
    }
  }
  // Keep dataset order for the training set so it does not depend on the shuffle.
  std::sort(train_base.begin() + std::ptrdiff_t(std::min(n_val, train_base.size())), train_base.end());
  for (std::size_t k = n_val; k < train_base.size(); ++k) split.train.push_back(dataset[train_base[k]].landmarks);
  for (const auto& s : dataset.subjects()) {
    if (s.provenance != Provenance::Augmented) continue;
    if (plan.fold_of(s) == fold || held_out.contains(s.parent_id)) continue;
    split.train.push_back(s.landmarks);
  }
  return split;
}

CrossValidation cross_validate(const ExperimentConfig& config, const Dataset& dataset, std::size_t threads) {
  config.validate();
  CrossValidation cv;
  cv.plan = make_folds(dataset, config.folds, config.seed);
  cv.dataset = dataset;
  if (config.augment_count > 0) {
    Rng rng(derive_seed(config.seed, {0xa06}));
    AugmentOptions opts;
    opts.folds = &cv.plan;
    cv.dataset = generate_augmented(dataset, config.augment_count, rng, opts);
    cv.plan.assign_children(cv.dataset);
  }
  for (std::size_t f = 0; f < config.folds; ++f) {
    cv.splits.push_back(split_fold(cv.dataset, cv.plan, f, config.val_fraction, config.seed));
    if (cv.splits.back().test.empty()) throw ConfigError("fold " + std::to_string(f) + " has no test subjects");
    if (cv.splits.back().train.size() < 2) {
      throw ConfigError("fold " + std::to_string(f) + " has fewer than 2 training subjects");
    }
  }

  std::vector<std::optional<TrainResult>> results(config.folds);
  std::vector<std::exception_ptr> errors(config.folds);
  auto run = [&](std::size_t f) {
    try {
      results[f].emplace(train_model(config, cv.splits[f].train, cv.splits[f].val, f));
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, config.folds);
  if (threads == 1) {
    for (std::size_t f = 0; f < config.folds; ++f) run(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t f = next++; f < config.folds; f = next++) run(f);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& r : results) cv.folds.push_back(std::move(*r));
  return cv;
}

std::size_t threads_from_env() {
  if (const char* env = std::getenv("RRN_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace rrn
