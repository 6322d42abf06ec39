#include "rrn/rrn_model.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "rrn/error.hpp"
#include "rrn/geometry.hpp"

namespace rrn {

std::string_view to_string(RuVariant v) { return v == RuVariant::Mlp ? "mlp" : "dense"; }

std::string_view to_string(DropoutMode m) {
  switch (m) {
    case DropoutMode::None: return "none";
    case DropoutMode::Regular: return "regular";
    case DropoutMode::Variational: return "variational";
    case DropoutMode::Targeted: return "targeted";
  }
  return "none";
}

RuVariant ru_variant_from_string(std::string_view s) {
  if (s == "mlp") return RuVariant::Mlp;
  if (s == "dense") return RuVariant::DenseBlock;
  throw ConfigError("unknown relation unit variant '" + std::string(s) + "' (valid: mlp, dense)");
}

DropoutMode dropout_mode_from_string(std::string_view s) {
  for (auto m : {DropoutMode::None, DropoutMode::Regular, DropoutMode::Variational, DropoutMode::Targeted}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown dropout mode '" + std::string(s) + "' (valid: none, regular, variational, targeted)");
}

void RrnConfig::validate() const {
  if (input_names.size() < 2) throw ConfigError("RRN needs at least 2 input landmarks");
  if (target_names.empty()) throw ConfigError("RRN needs at least 1 target landmark");
  if (input_names.size() + target_names.size() > kNumLandmarks) {
    throw ConfigError("inputs plus targets exceed the 14 landmarks");
  }
  std::set<LandmarkName> inputs(input_names.begin(), input_names.end());
  std::set<LandmarkName> targets(target_names.begin(), target_names.end());
  if (inputs.size() != input_names.size()) throw ConfigError("duplicate input landmark");
  if (targets.size() != target_names.size()) throw ConfigError("duplicate target landmark");
  if (!inputs.contains(LandmarkName::Me)) throw ConfigError("Me must be an input landmark (feature reference)");
  for (auto t : target_names) {
    if (inputs.contains(t)) {
      throw ConfigError("landmark " + std::string(rrn::to_string(t)) + " is both an input and a target");
    }
  }
  if (relation_dim == 0 || mlp_hidden == 0) throw ConfigError("relation unit widths must be positive");
}

std::vector<LayerSpec> relation_unit_specs(RuVariant variant, std::size_t in, std::size_t out, std::size_t mlp_hidden,
                                           const DropoutConfig& dropout) {
  std::vector<LayerSpec> specs;
  auto weight_dropout = [&] {
    if (dropout.mode == DropoutMode::Targeted) {
      specs.push_back({DropoutTargetedSpec{{dropout.gamma, dropout.alpha}}});
    }
  };
  auto activation_dropout = [&] {
    if (dropout.mode == DropoutMode::Regular) specs.push_back({DropoutRegularSpec{dropout.p}});
    if (dropout.mode == DropoutMode::Variational) specs.push_back({DropoutVariationalSpec{dropout.init_log_alpha}});
  };
  if (variant == RuVariant::Mlp) {
    weight_dropout();
    specs.push_back({FullyConnectedSpec{in, mlp_hidden, std::nullopt}});
    specs.push_back({BatchNormSpec{mlp_hidden}});
    specs.push_back({ReLUSpec{}});
    activation_dropout();
    weight_dropout();
    specs.push_back({FullyConnectedSpec{mlp_hidden, mlp_hidden, std::nullopt}});
    specs.push_back({BatchNormSpec{mlp_hidden}});
    specs.push_back({ReLUSpec{}});
    activation_dropout();
    weight_dropout();
    specs.push_back({FullyConnectedSpec{mlp_hidden, out, std::nullopt}});
  } else {
    const DenseBlockSpec block{in, 4, 4, std::nullopt};
    weight_dropout();
    specs.push_back({block});
    activation_dropout();
    weight_dropout();
    specs.push_back({FullyConnectedSpec{in + block.layers * block.growth, out, std::nullopt}});
  }
  return specs;
}

double loss(const Prediction& prediction, const LandmarkSet& truth) {
  const std::size_t n = prediction.branches.size();
  const std::size_t m = prediction.targets.size();
  if (n == 0 || m == 0) throw InvalidInput("loss: empty prediction");
  double total = 0.0;
  for (const auto& branch : prediction.branches) {
    for (std::size_t k = 0; k < m; ++k) total += (branch.at(k) - truth.at(prediction.targets[k])).squaredNorm();
  }
  return total / static_cast<double>(n * m);
}

double branch_loss(std::span<const Tensor> branches, const RowMatrix& truth, std::vector<Tensor>* grads) {
  if (branches.empty()) throw InvalidInput("branch_loss: no branches");
  const auto n = static_cast<double>(branches.size());
  const auto batch = static_cast<double>(truth.rows());
  const auto m = static_cast<double>(truth.cols()) / 3.0;
  const double norm = 1.0 / (n * m * batch);
  double total = 0.0;
  if (grads) grads->clear();
  for (const auto& b : branches) {
    if (b.rows() != std::size_t(truth.rows()) || b.cols() != std::size_t(truth.cols())) {
      throw ShapeError("branch_loss: branch shape " + shape_string(b.shape()) + " does not match truth (" +
                       std::to_string(truth.rows()) + ", " + std::to_string(truth.cols()) + ")");
    }
    const RowMatrix diff = b.matrix() - truth;
    total += diff.squaredNorm();
    if (grads) grads->push_back(Tensor::from_matrix(diff * (2.0 * norm)));
  }
  return total * norm;
}

// RrnModel ------------------------------------------------------------------

RrnModel RrnModel::build(const RrnConfig& config, std::uint64_t seed) {
  config.validate();
  RrnModel model;
  model.config_ = config;
  model.seed_ = seed;
  model.inputs_ = canonical_order(config.input_names);
  for (auto a : model.inputs_) {
    if (is_mandibular(a)) model.mandibular_inputs_.push_back(a);
    for (auto b : model.inputs_) {
      if (a != b) model.pairs_.emplace_back(a, b);
    }
  }
  const std::size_t m3 = 3 * config.m();
  const auto pair_specs =
      relation_unit_specs(config.ru_variant, kFeatureDim, config.relation_dim, config.mlp_hidden, config.dropout);
  const auto fusion_specs =
      relation_unit_specs(config.ru_variant, config.relation_dim, m3, config.mlp_hidden, config.dropout);

  if (config.shared_pairwise) {
    Rng init(derive_seed(seed, {2}));
    model.shared_unit_ = std::make_unique<Sequential>(pair_specs, kFeatureDim, init);
  } else {
    for (const auto& [a, b] : model.pairs_) {
      Rng init(derive_seed(seed, {0, std::uint64_t(index_of(a)), std::uint64_t(index_of(b))}));
      model.pairwise_[{a, b}] = std::make_unique<Sequential>(pair_specs, kFeatureDim, init);
    }
  }
  for (auto a : model.inputs_) {
    Rng init(derive_seed(seed, {1, std::uint64_t(index_of(a))}));
    model.fusion_[a] = std::make_unique<Sequential>(fusion_specs, config.relation_dim, init);
  }
  for (const auto& key : model.pairs_) model.feature_norm_[key] = AffineNormalizer(kFeatureDim);
  model.target_norm_ = AffineNormalizer(m3);
  model.rng_.seed(derive_seed(seed, {3}));
  model.init_store();
  return model;
}

void RrnModel::init_store() {
  std::vector<NamedTensor> params;
  auto append = [&](const std::string& prefix, Sequential& unit) {
    for (auto p : unit.parameters()) {
      p.name = prefix + p.name;
      params.push_back(p);
    }
  };
  if (shared_unit_) append("pair/shared/", *shared_unit_);
  for (const auto& [key, unit] : pairwise_) {
    append("pair/" + std::string(rrn::to_string(key.first)) + "-" + std::string(rrn::to_string(key.second)) + "/",
           *unit);
  }
  for (const auto& [a, unit] : fusion_) append("fusion/" + std::string(rrn::to_string(a)) + "/", *unit);
  store_ = ParamStore(std::move(params));
}

std::vector<NamedTensor> RrnModel::state_tensors() {
  std::vector<NamedTensor> out;
  auto append = [&](const std::string& prefix, Sequential& unit) {
    for (auto p : unit.parameters()) out.push_back({prefix + p.name, p.tensor});
    for (auto p : unit.buffers()) out.push_back({prefix + p.name, p.tensor});
  };
  if (shared_unit_) append("pair/shared/", *shared_unit_);
  for (const auto& [key, unit] : pairwise_) {
    append("pair/" + std::string(rrn::to_string(key.first)) + "-" + std::string(rrn::to_string(key.second)) + "/",
           *unit);
  }
  for (const auto& [a, unit] : fusion_) append("fusion/" + std::string(rrn::to_string(a)) + "/", *unit);
  return out;
}

Sequential& RrnModel::pairwise_unit(LandmarkName a, LandmarkName b) {
  if (shared_unit_) return *shared_unit_;
  auto it = pairwise_.find({a, b});
  if (it == pairwise_.end()) {
    throw ConfigError("no pairwise unit for (" + std::string(rrn::to_string(a)) + ", " +
                      std::string(rrn::to_string(b)) + ")");
  }
  return *it->second;
}

Sequential& RrnModel::fusion_unit(LandmarkName a) {
  auto it = fusion_.find(a);
  if (it == fusion_.end()) throw ConfigError("no fusion unit for " + std::string(rrn::to_string(a)));
  return *it->second;
}

double RrnModel::d1(const LandmarkSet& set) const { return mandible_diagonal(set, mandibular_inputs_); }

PairwiseFeature RrnModel::features(const LandmarkSet& set, LandmarkName a, LandmarkName b) const {
  return pairwise_features(set, a, b, d1(set));
}

void RrnModel::fit_normalizers(std::span<const LandmarkSet> train) {
  if (!config_.normalize) return;
  if (train.empty()) throw InvalidInput("fit_normalizers: no training subjects");
  std::vector<double> d1s;
  d1s.reserve(train.size());
  for (const auto& s : train) d1s.push_back(d1(s));
  for (const auto& [a, b] : pairs_) {
    std::vector<PairwiseFeature> rows;
    rows.reserve(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) rows.push_back(pairwise_features(train[i], a, b, d1s[i]));
    feature_norm_[{a, b}] = rrn::feature_normalizer(rows);
  }
  std::vector<std::vector<double>> targets;
  targets.reserve(train.size());
  for (const auto& s : train) {
    std::vector<double> row;
    for (auto t : config_.target_names) {
      const Vec3& p = s.at(t);
      row.insert(row.end(), {p.x(), p.y(), p.z()});
    }
    targets.push_back(std::move(row));
  }
  target_norm_ = AffineNormalizer::fit(targets);
}

const AffineNormalizer& RrnModel::feature_normalizer(LandmarkName a, LandmarkName b) const {
  return feature_norm_.at({a, b});
}

void RrnModel::set_normalizers(std::map<PairKey, AffineNormalizer> features, AffineNormalizer targets) {
  for (const auto& key : pairs_) {
    auto it = features.find(key);
    if (it == features.end() || it->second.dim() != kFeatureDim) {
      throw ShapeError("set_normalizers: missing or malformed feature normalizer");
    }
  }
  if (targets.dim() != 3 * config_.m()) throw ShapeError("set_normalizers: target normalizer width mismatch");
  feature_norm_ = std::move(features);
  target_norm_ = std::move(targets);
}

EncodedSet RrnModel::encode(std::span<const LandmarkSet> sets, bool with_targets) const {
  EncodedSet enc;
  enc.size = sets.size();
  enc.pair_features.assign(pairs_.size(), RowMatrix(Eigen::Index(sets.size()), Eigen::Index(kFeatureDim)));
  const std::size_t m3 = 3 * config_.m();
  if (with_targets) enc.targets.resize(Eigen::Index(sets.size()), Eigen::Index(m3));
  for (std::size_t r = 0; r < sets.size(); ++r) {
    const auto& s = sets[r];
    const double diag = d1(s);
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      auto f = pairwise_features(s, pairs_[p].first, pairs_[p].second, diag);
      feature_norm_.at(pairs_[p]).apply(f);
      for (std::size_t c = 0; c < kFeatureDim; ++c) enc.pair_features[p](Eigen::Index(r), Eigen::Index(c)) = f[c];
    }
    if (with_targets) {
      std::vector<double> row;
      row.reserve(m3);
      for (auto t : config_.target_names) {
        const Vec3& v = s.at(t);
        row.insert(row.end(), {v.x(), v.y(), v.z()});
      }
      target_norm_.apply(row);
      for (std::size_t c = 0; c < m3; ++c) enc.targets(Eigen::Index(r), Eigen::Index(c)) = row[c];
    }
  }
  return enc;
}

std::vector<Tensor> RrnModel::forward(const EncodedSet& data, std::span<const std::size_t> rows, Mode mode) {
  const std::size_t batch = rows.size();
  if (batch == 0) throw InvalidInput("RrnModel::forward: empty batch");
  for (auto r : rows) {
    if (r >= data.size) throw ShapeError("RrnModel::forward: row index out of range");
  }
  if (data.pair_features.size() != pairs_.size()) throw ShapeError("RrnModel::forward: encoded pair count mismatch");
  last_batch_ = batch;

  auto gather = [&](std::size_t slot) {
    Tensor t(batch, kFeatureDim);
    auto dst = t.matrix();
    for (std::size_t i = 0; i < batch; ++i) dst.row(Eigen::Index(i)) = data.pair_features[slot].row(Eigen::Index(rows[i]));
    return t;
  };

  std::vector<Tensor> relations(pairs_.size());
  if (shared_unit_) {
    Tensor stacked(batch * pairs_.size(), kFeatureDim);
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      stacked.matrix().middleRows(Eigen::Index(p * batch), Eigen::Index(batch)) = gather(p).matrix();
    }
    const Tensor out = shared_unit_->forward(stacked, mode, rng_);
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      relations[p] = Tensor::from_matrix(out.matrix().middleRows(Eigen::Index(p * batch), Eigen::Index(batch)));
    }
  } else {
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      relations[p] = pairwise_.at(pairs_[p])->forward(gather(p), mode, rng_);
    }
  }

  const double inv_partners = 1.0 / static_cast<double>(inputs_.size() - 1);
  std::vector<Tensor> branches;
  branches.reserve(inputs_.size());
  std::size_t p = 0;
  for (auto a : inputs_) {
    Tensor mean(batch, config_.relation_dim);
    // pairs_ is grouped by first landmark, partners in canonical order.
    for (std::size_t j = 0; j + 1 < inputs_.size(); ++j, ++p) mean.matrix() += relations[p].matrix();
    mean.matrix() *= inv_partners;
    branches.push_back(fusion_.at(a)->forward(mean, mode, rng_));
  }
  return branches;
}

void RrnModel::backward(std::span<const Tensor> branch_grads) {
  if (branch_grads.size() != inputs_.size()) throw ShapeError("RrnModel::backward: expected one gradient per branch");
  const double inv_partners = 1.0 / static_cast<double>(inputs_.size() - 1);
  std::vector<Tensor> relation_grads(pairs_.size());
  std::size_t p = 0;
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    Tensor g = fusion_.at(inputs_[i])->backward(branch_grads[i]);
    g.matrix() *= inv_partners;
    for (std::size_t j = 0; j + 1 < inputs_.size(); ++j, ++p) relation_grads[p] = g;
  }
  if (shared_unit_) {
    const std::size_t batch = last_batch_;
    Tensor stacked(batch * pairs_.size(), config_.relation_dim);
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      stacked.matrix().middleRows(Eigen::Index(k * batch), Eigen::Index(batch)) = relation_grads[k].matrix();
    }
    shared_unit_->backward(stacked);
  } else {
    for (std::size_t k = 0; k < pairs_.size(); ++k) pairwise_.at(pairs_[k])->backward(relation_grads[k]);
  }
}

double RrnModel::regularize(double scale) {
  double total = 0.0;
  if (shared_unit_) total += shared_unit_->regularize(scale);
  for (auto& [key, unit] : pairwise_) total += unit->regularize(scale);
  for (auto& [key, unit] : fusion_) total += unit->regularize(scale);
  return total;
}

Prediction RrnModel::to_prediction(std::span<const Tensor> branches, std::size_t row) const {
  Prediction pred;
  pred.inputs = inputs_;
  pred.targets = config_.target_names;
  const std::size_t m = config_.m();
  pred.terminal.assign(m, Vec3::Zero());
  for (const auto& b : branches) {
    std::vector<double> values(b.matrix().row(Eigen::Index(row)).begin(), b.matrix().row(Eigen::Index(row)).end());
    target_norm_.invert(values);
    std::vector<Vec3> points(m);
    for (std::size_t k = 0; k < m; ++k) points[k] = Vec3(values[3 * k], values[3 * k + 1], values[3 * k + 2]);
    for (std::size_t k = 0; k < m; ++k) pred.terminal[k] += points[k];
    pred.branches.push_back(std::move(points));
  }
  for (auto& t : pred.terminal) t /= static_cast<double>(branches.size());
  return pred;
}

Prediction RrnModel::predict(const LandmarkSet& set) { return predict(std::span<const LandmarkSet>(&set, 1)).front(); }

std::vector<Prediction> RrnModel::predict(std::span<const LandmarkSet> sets) {
  std::vector<Prediction> out;
  if (sets.empty()) return out;
  const EncodedSet enc = encode(sets, false);
  std::vector<std::size_t> rows(sets.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto branches = forward(enc, rows, Mode::Eval);
  out.reserve(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) out.push_back(to_prediction(branches, i));
  return out;
}

std::map<LandmarkName, Vec3> RrnModel::predict_mm(const LandmarkSet& set) {
  const Prediction pred = predict(set);
  std::map<LandmarkName, Vec3> out;
  for (std::size_t k = 0; k < pred.targets.size(); ++k) out[pred.targets[k]] = set.to_mm(pred.terminal[k]);
  return out;
}

}  // namespace rrn
