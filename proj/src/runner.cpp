#include "rrn/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "rrn/checkpoint.hpp"
#include "rrn/error.hpp"

namespace rrn {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double mean_target_error(const MetricsReport& r) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& row : r.rows) {
    if (row.fold) continue;
    sum += row.mean_mm;
    ++count;
  }
  return count ? sum / double(count) : 0.0;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

DropoutComparison compare_dropout(const ExperimentConfig& base, const Dataset& dataset) {
  base.validate();
  const auto plan = make_folds(dataset, base.folds, base.seed);
  const auto split = split_fold(dataset, plan, 0, base.val_fraction, base.seed);
  if (split.val.empty()) throw ConfigError("dropout comparison needs validation subjects");

  DropoutComparison cmp;
  for (auto mode : {DropoutMode::Regular, DropoutMode::Variational, DropoutMode::Targeted}) {
    ExperimentConfig cfg = base;
    cfg.rrn.dropout.mode = mode;
    const auto start = std::chrono::steady_clock::now();
    auto result = train_model(cfg, split.train, split.val, 0);
    RegimeResult row;
    row.mode = mode;
    row.best_val_loss = best_val_loss(result.log);
    if (!result.log.empty()) {
      row.final_train_loss = result.log.back().train_loss;
      row.final_val_loss = result.log.back().val_loss.value_or(std::numeric_limits<double>::quiet_NaN());
    }
    row.mean_error_mm = mean_target_error(evaluate(result.model, split.test, cfg.name));
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.log = std::move(result.log);
    cmp.rows.push_back(std::move(row));
  }
  double slowest = 0.0;
  for (const auto& r : cmp.rows) slowest = std::max(slowest, r.best_val_loss);
  cmp.threshold = base.threshold_factor * slowest;
  for (auto& r : cmp.rows) r.epochs_to_threshold = epochs_to_threshold(r.log, cmp.threshold);
  return cmp;
}

void write_comparison_csv(const DropoutComparison& cmp, std::ostream& out) {
  out << "regime,epochs_to_threshold,best_val_loss,final_train_loss,final_val_loss,mean_error_mm,threshold\n";
  for (const auto& r : cmp.rows) {
    out << to_string(r.mode) << ',' << (r.epochs_to_threshold ? std::to_string(*r.epochs_to_threshold) : "") << ','
        << fmt(r.best_val_loss) << ',' << fmt(r.final_train_loss) << ',' << fmt(r.final_val_loss) << ','
        << fmt(r.mean_error_mm) << ',' << fmt(cmp.threshold) << '\n';
  }
}

nlohmann::json to_json(const DropoutComparison& cmp) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : cmp.rows) {
    rows.push_back({{"regime", to_string(r.mode)},
                    {"epochs_to_threshold", r.epochs_to_threshold ? nlohmann::json(*r.epochs_to_threshold) : nullptr},
                    {"best_val_loss", r.best_val_loss},
                    {"final_train_loss", r.final_train_loss},
                    {"mean_error_mm", r.mean_error_mm},
                    {"seconds", r.seconds}});
  }
  return {{"threshold", cmp.threshold}, {"regimes", std::move(rows)}};
}

void write_log_jsonl(std::span<const EpochLog> log, std::ostream& out) {
  for (const auto& e : log) {
    nlohmann::json j = {{"epoch", e.epoch},
                        {"fold", e.fold},
                        {"train_loss", e.train_loss},
                        {"val_loss", e.val_loss ? nlohmann::json(*e.val_loss) : nullptr},
                        {"seconds", e.seconds}};
    out << j.dump() << '\n';
  }
}

PresetRun run_preset(const ExperimentConfig& config, const Dataset& dataset, const std::filesystem::path& out_dir,
                     std::size_t threads) {
  const auto start = std::chrono::steady_clock::now();
  PresetRun run;
  run.cv = cross_validate(config, dataset, threads);

  std::vector<MetricsReport> reports;
  for (std::size_t f = 0; f < run.cv.folds.size(); ++f) {
    auto& fold = run.cv.folds[f];
    auto r = evaluate(fold.model, run.cv.splits[f].test, config.name, f);
    const double best = best_val_loss(fold.log);
    r.epochs_to_threshold.push_back(std::isfinite(best) ? epochs_to_threshold(fold.log, config.threshold_factor * best)
                                                        : std::nullopt);
    reports.push_back(std::move(r));
  }
  run.report = merge_reports(reports);
  run.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::filesystem::create_directories(out_dir / "checkpoints");
  {
    auto out = open_out(out_dir / "metrics.csv");
    write_metrics_csv(run.report, out);
  }
  {
    auto out = open_out(out_dir / "errors.csv");
    write_errors_csv(run.report, out);
  }
  {
    auto out = open_out(out_dir / "log.jsonl");
    for (const auto& fold : run.cv.folds) write_log_jsonl(fold.log, out);
  }
  for (std::size_t f = 0; f < run.cv.folds.size(); ++f) {
    save_checkpoint(run.cv.folds[f].model, out_dir / "checkpoints" / ("fold-" + std::to_string(f) + ".cbor"));
  }
  nlohmann::json thresholds = nlohmann::json::array();
  for (const auto& e : run.report.epochs_to_threshold) thresholds.push_back(e ? nlohmann::json(*e) : nullptr);
  nlohmann::json summary = {{"config", to_json(config)},
                            {"subjects", dataset.size()},
                            {"training_pool", run.cv.dataset.size()},
                            {"skipped_subjects", run.report.skipped_subjects},
                            {"epochs_to_threshold", std::move(thresholds)},
                            {"seconds", run.report.seconds},
                            {"relation_units_per_fold", run.cv.folds.front().model.relation_unit_count()}};
  auto out = open_out(out_dir / "summary.json");
  out << summary.dump(2) << '\n';
  return run;
}

PresetRun run_preset(const std::string& name, const std::filesystem::path& dataset_path,
                     const std::filesystem::path& out_dir, std::uint64_t seed) {
  auto config = preset(name);
  config.seed = seed;
  const auto dataset = load_dataset(dataset_path);
  return run_preset(config, dataset, out_dir, threads_from_env());
}

}  // namespace rrn
