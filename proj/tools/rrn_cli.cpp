#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "rrn/augment.hpp"
#include "rrn/checkpoint.hpp"
#include "rrn/dataset.hpp"
#include "rrn/error.hpp"
#include "rrn/experiment.hpp"
#include "rrn/features.hpp"
#include "rrn/metrics.hpp"
#include "rrn/runner.hpp"
#include "rrn/synth.hpp"
#include "rrn/trainer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::uint64_t seed = 0;
  std::string out;
  bool json = false;

  std::string data;
  std::string preset = "5-landmarks";
  std::string ru;
  std::string dropout;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> folds;
  std::optional<double> lr;
  std::optional<std::size_t> relation_dim;
  bool no_normalize = false;
  std::size_t augment = 0;

  std::size_t count = 0;
  std::string subject;
  std::string checkpoint;
  std::string name;
};

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

rrn::ExperimentConfig experiment(const Options& o) {
  auto cfg = rrn::preset(o.preset);
  cfg.seed = o.seed;
  if (!o.ru.empty()) cfg.rrn.ru_variant = rrn::ru_variant_from_string(o.ru);
  if (!o.dropout.empty()) cfg.rrn.dropout.mode = rrn::dropout_mode_from_string(o.dropout);
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.batch) cfg.batch_size = *o.batch;
  if (o.folds) cfg.folds = *o.folds;
  if (o.lr) cfg.adam.lr = *o.lr;
  if (o.relation_dim) cfg.rrn.relation_dim = *o.relation_dim;
  if (o.no_normalize) cfg.rrn.normalize = false;
  cfg.augment_count = o.augment;
  cfg.validate();
  return cfg;
}

rrn::Dataset dataset(const Options& o) {
  if (o.data.empty()) throw UsageError("--data is required");
  return rrn::load_dataset(o.data);
}

fs::path out_dir(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  return o.out;
}

// Writes to the --out file, or stdout when none was given.
void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw rrn::Error("cannot write '" + o.out + "'");
  f << text;
}

void check_inputs(const rrn::Dataset& data, std::span<const rrn::LandmarkName> required) {
  std::ostringstream missing;
  for (const auto& s : data.subjects()) {
    std::string names;
    for (auto n : required) {
      if (!s.landmarks.has(n)) names += (names.empty() ? "" : ", ") + std::string(rrn::to_string(n));
    }
    if (!names.empty()) missing << "\n  " << s.landmarks.subject_id << ": " << names;
  }
  if (!missing.str().empty()) throw UsageError("subjects lack landmarks required by the model:" + missing.str());
}

int gen_synth(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  rrn::Rng rng(rrn::derive_seed(o.seed, {0x5e}));
  auto data = rrn::generate_synthetic(rrn::default_template(), o.count, rng);
  rrn::save_dataset(data, o.out);
  std::cerr << "wrote " << data.size() << " synthetic subjects to " << o.out << '\n';
  return 0;
}

int augment(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  const auto data = dataset(o);
  rrn::Rng rng(rrn::derive_seed(o.seed, {0xa06}));
  const auto out = rrn::generate_augmented(data, o.count, rng);
  rrn::save_dataset(out, o.out);
  std::cerr << "wrote " << out.size() << " subjects (" << o.count << " augmented) to " << o.out << '\n';
  return 0;
}

int features(const Options& o) {
  const auto cfg = rrn::preset(o.preset);
  const auto data = dataset(o);
  const auto* subject = data.find(o.subject);
  if (!subject) throw UsageError("unknown subject '" + o.subject + "'");
  std::ostringstream csv;
  csv << "subject,a,b";
  for (std::size_t i = 1; i <= rrn::kFeatureDim; ++i) csv << ",f" << i;
  csv << '\n';
  for (const auto& row : rrn::pairwise_table(subject->landmarks, cfg.rrn.input_names)) {
    csv << o.subject << ',' << rrn::to_string(row.a) << ',' << rrn::to_string(row.b);
    for (double v : row.values) csv << ',' << fmt9(v);
    csv << '\n';
  }
  emit(o, csv.str());
  return 0;
}

int train(const Options& o) {
  const auto cfg = experiment(o);
  const auto data = dataset(o);
  const auto dir = out_dir(o);
  auto cv = rrn::cross_validate(cfg, data, rrn::threads_from_env());
  fs::create_directories(dir / "checkpoints");
  std::ofstream log(dir / "log.jsonl", std::ios::binary);
  for (std::size_t f = 0; f < cv.folds.size(); ++f) {
    rrn::write_log_jsonl(cv.folds[f].log, log);
    rrn::save_checkpoint(cv.folds[f].model, dir / "checkpoints" / ("fold-" + std::to_string(f) + ".cbor"));
  }
  std::cerr << "trained " << cv.folds.size() << " folds into " << dir.string() << '\n';
  return 0;
}

int predict(const Options& o) {
  if (o.checkpoint.empty()) throw UsageError("--checkpoint is required");
  auto model = rrn::load_checkpoint(o.checkpoint);
  const auto data = dataset(o);
  check_inputs(data, model.inputs());
  const auto sets = data.landmark_sets();
  const auto predictions = model.predict(sets);
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < sets.size(); ++i) {
    nlohmann::json p = nlohmann::json::object();
    for (std::size_t k = 0; k < predictions[i].targets.size(); ++k) {
      const auto& px = predictions[i].terminal[k];
      const auto mm = sets[i].to_mm(px);
      p[std::string(rrn::to_string(predictions[i].targets[k]))] = {{"px", {px.x(), px.y(), px.z()}},
                                                                   {"mm", {mm.x(), mm.y(), mm.z()}}};
    }
    out.push_back({{"id", sets[i].subject_id}, {"predictions", std::move(p)}});
  }
  emit(o, out.dump(2) + "\n");
  return 0;
}

int evaluate(const Options& o) {
  if (o.checkpoint.empty()) throw UsageError("--checkpoint is required");
  auto model = rrn::load_checkpoint(o.checkpoint);
  const auto data = dataset(o);
  const auto dir = out_dir(o);
  const auto sets = data.landmark_sets();
  const auto report = rrn::evaluate(model, sets, o.name.empty() ? "checkpoint" : o.name);
  fs::create_directories(dir);
  std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
  rrn::write_metrics_csv(report, metrics);
  std::ofstream errors(dir / "errors.csv", std::ios::binary);
  rrn::write_errors_csv(report, errors);
  if (report.skipped_subjects > 0) {
    std::cerr << "warning: skipped " << report.skipped_subjects << " subjects lacking landmarks\n";
  }
  return 0;
}

int compare_dropout(const Options& o) {
  const auto cfg = experiment(o);
  const auto data = dataset(o);
  const auto dir = out_dir(o);
  const auto cmp = rrn::compare_dropout(cfg, data);
  fs::create_directories(dir);
  std::ofstream csv(dir / "comparison.csv", std::ios::binary);
  rrn::write_comparison_csv(cmp, csv);
  std::ofstream json(dir / "comparison.json", std::ios::binary);
  json << rrn::to_json(cmp).dump(2) << '\n';
  rrn::write_comparison_csv(cmp, std::cout);
  return 0;
}

int run_preset(const Options& o) {
  const auto cfg = experiment(o);
  const auto data = dataset(o);
  const auto dir = out_dir(o);
  const auto run = rrn::run_preset(cfg, data, dir, rrn::threads_from_env());
  std::cerr << "wrote " << (dir / "metrics.csv").string() << " (" << run.report.targets.size() << " landmarks, "
            << run.cv.folds.size() << " folds)\n";
  return 0;
}

void report_error(const Options& o, int code, const std::string& kind, const std::string& message) {
  if (o.json) {
    std::cerr << nlohmann::json{{"error", {{"code", code}, {"kind", kind}, {"message", message}}}}.dump() << '\n';
  } else {
    std::cerr << "error: " << message << '\n';
  }
}

void add_training_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--data", o.data, "Dataset JSON");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--ru", o.ru, "Relation unit variant")->check(CLI::IsMember({"mlp", "dense"}));
  cmd->add_option("--dropout", o.dropout, "Dropout regime")
      ->check(CLI::IsMember({"none", "regular", "variational", "targeted"}));
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--batch", o.batch, "Batch size");
  cmd->add_option("--folds", o.folds, "Cross-validation folds");
  cmd->add_option("--lr", o.lr, "Adam learning rate");
  cmd->add_option("--relation-dim", o.relation_dim, "Width of pairwise relation embeddings");
  cmd->add_flag("--no-normalize", o.no_normalize, "Train on raw pixel features");
  cmd->add_option("--augment", o.augment, "Interpolated subjects added before training");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Relational reasoning network for craniomaxillofacial landmarks"};
  app.require_subcommand(1);
  app.add_option("--seed", o.seed, "Base random seed")->capture_default_str();
  app.add_flag("--json", o.json, "Machine-readable errors on stderr");

  auto* synth = app.add_subcommand("gen-synth", "Generate synthetic subjects");
  synth->add_option("--count", o.count, "Number of subjects")->default_val(200);
  synth->add_option("--out", o.out, "Output dataset JSON");

  auto* aug = app.add_subcommand("augment", "Append interpolated subjects");
  aug->add_option("--data", o.data, "Dataset JSON");
  aug->add_option("--count", o.count, "Number of augmented subjects")->default_val(5000);
  aug->add_option("--out", o.out, "Output dataset JSON");

  auto* feat = app.add_subcommand("features", "Pairwise features of one subject as CSV");
  feat->add_option("--data", o.data, "Dataset JSON");
  feat->add_option("--subject", o.subject, "Subject id")->required();
  feat->add_option("--preset", o.preset, "Landmark configuration")->capture_default_str();
  feat->add_option("--out", o.out, "Output CSV (stdout when omitted)");

  auto* tr = app.add_subcommand("train", "Cross-validated training, checkpoints and log");
  tr->add_option("--preset", o.preset, "Landmark configuration")->capture_default_str();
  add_training_flags(tr, o);

  auto* pred = app.add_subcommand("predict", "Predict target landmarks with a checkpoint");
  pred->add_option("--checkpoint", o.checkpoint, "Checkpoint file");
  pred->add_option("--data", o.data, "Dataset JSON");
  pred->add_option("--out", o.out, "Output JSON (stdout when omitted)");

  auto* ev = app.add_subcommand("evaluate", "Landmark errors of a checkpoint on test subjects");
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint file");
  ev->add_option("--data", o.data, "Dataset JSON of test subjects");
  ev->add_option("--out", o.out, "Output directory");
  ev->add_option("--name", o.name, "Label for the preset column");

  auto* cmp = app.add_subcommand("compare-dropout", "Epochs-to-threshold for each dropout regime");
  cmp->add_option("--preset", o.preset, "Landmark configuration")->capture_default_str();
  add_training_flags(cmp, o);

  auto* run = app.add_subcommand("run-preset", "Full cross-validated experiment");
  run->add_option("name", o.preset, "Preset name")->required();
  run->add_option("--preset", o.preset, "Preset name");
  add_training_flags(run, o);

  for (auto* sub : app.get_subcommands({})) sub->add_option("--seed", o.seed, "Base random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(o, kExitUsage, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (*synth) return gen_synth(o);
    if (*aug) return augment(o);
    if (*feat) return features(o);
    if (*tr) return train(o);
    if (*pred) return predict(o);
    if (*ev) return evaluate(o);
    if (*cmp) return compare_dropout(o);
    if (*run) return run_preset(o);
  } catch (const UsageError& e) {
    report_error(o, kExitUsage, "usage", e.what());
    return kExitUsage;
  } catch (const rrn::ConfigError& e) {
    report_error(o, kExitUsage, "config", e.what());
    return kExitUsage;
  } catch (const rrn::InvalidInput& e) {
    report_error(o, kExitUsage, "input", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    report_error(o, kExitRuntime, "runtime", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
