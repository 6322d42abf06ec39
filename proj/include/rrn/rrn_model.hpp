#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "rrn/features.hpp"
#include "rrn/landmarks.hpp"
#include "rrn/layers.hpp"
#include "rrn/optim.hpp"

namespace rrn {

enum class RuVariant { Mlp, DenseBlock };
enum class DropoutMode { None, Regular, Variational, Targeted };

std::string_view to_string(RuVariant v);
std::string_view to_string(DropoutMode m);
RuVariant ru_variant_from_string(std::string_view s);
DropoutMode dropout_mode_from_string(std::string_view s);

struct DropoutConfig {
  DropoutMode mode = DropoutMode::None;
  double p = 0.2;                                  // regular
  double init_log_alpha = -1.3862943611198906;     // variational, log(0.25)
  double gamma = 0.5;                              // targeted
  double alpha = 0.5;                              // targeted
};

struct RrnConfig {
  std::vector<LandmarkName> input_names;
  std::vector<LandmarkName> target_names;
  RuVariant ru_variant = RuVariant::DenseBlock;
  std::size_t relation_dim = 64;  ///< output width of each pairwise unit
  std::size_t mlp_hidden = 256;   ///< hidden width of MLP units
  DropoutConfig dropout;
  bool shared_pairwise = false;   ///< one pairwise unit for every ordered pair
  bool normalize = true;          ///< standardize features and targets

  std::size_t n() const { return input_names.size(); }
  std::size_t m() const { return target_names.size(); }

  /// Throws ConfigError: n < 2, Me not an input, duplicates, overlap between
  /// inputs and targets, no targets, n + m > 14, zero widths.
  void validate() const;
};

/// Layer stack of one relation unit.
std::vector<LayerSpec> relation_unit_specs(RuVariant variant, std::size_t in, std::size_t out, std::size_t mlp_hidden,
                                           const DropoutConfig& dropout);

/// Pixel-space output of the model for one subject. Branches are ordered by
/// canonical input order, targets by config order.
struct Prediction {
  std::vector<LandmarkName> inputs;
  std::vector<LandmarkName> targets;
  std::vector<std::vector<Vec3>> branches;  ///< [n][m]
  std::vector<Vec3> terminal;                ///< [m], mean of branches
};

/// Eq.-2 style branch loss for one subject in pixel space:
/// (1 / (n m)) sum_i sum_k |branch_i[k] - truth_k|^2.
double loss(const Prediction& prediction, const LandmarkSet& truth);

/// Batched branch loss on (batch x 3m) tensors; averages over the batch and
/// writes d loss / d branch into `grads` when non-null.
double branch_loss(std::span<const Tensor> branches, const RowMatrix& truth, std::vector<Tensor>* grads);

/// Feature rows of a set of subjects in pair-slot order, already normalized.
struct EncodedSet {
  std::vector<RowMatrix> pair_features;  ///< one (N x 19) block per pair slot
  RowMatrix targets;                     ///< (N x 3m), empty when not requested
  std::size_t size = 0;
};

/// Two-stage relational reasoning network: n(n-1) pairwise units g_ab on
/// pairwise features, a per-input mean G_a over partners, and n fusion
/// units f_a(G_a) predicting all targets. The terminal prediction is the
/// branch mean. Units are keyed by landmark identity and every sum runs in
/// canonical landmark order, so the order of input_names is immaterial.
class RrnModel {
 public:
  using PairKey = std::pair<LandmarkName, LandmarkName>;

  static RrnModel build(const RrnConfig& config, std::uint64_t seed);

  RrnModel(RrnModel&&) = default;
  RrnModel& operator=(RrnModel&&) = default;

  const RrnConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<LandmarkName>& inputs() const { return inputs_; }
  const std::vector<PairKey>& pairs() const { return pairs_; }

  std::size_t pairwise_unit_count() const { return shared_unit_ ? 1 : pairwise_.size(); }
  std::size_t fusion_unit_count() const { return fusion_.size(); }
  std::size_t relation_unit_count() const { return pairwise_unit_count() + fusion_unit_count(); }

  Sequential& pairwise_unit(LandmarkName a, LandmarkName b);
  Sequential& fusion_unit(LandmarkName a);

  /// Bounding-box diagonal of the subject's mandibular inputs.
  double d1(const LandmarkSet& set) const;
  PairwiseFeature features(const LandmarkSet& set, LandmarkName a, LandmarkName b) const;

  /// Fits per-pair feature and target standardization on training subjects.
  /// No-op (identity) when config().normalize is false.
  void fit_normalizers(std::span<const LandmarkSet> train);
  const AffineNormalizer& feature_normalizer(LandmarkName a, LandmarkName b) const;
  const AffineNormalizer& target_normalizer() const { return target_norm_; }
  void set_normalizers(std::map<PairKey, AffineNormalizer> features, AffineNormalizer targets);

  EncodedSet encode(std::span<const LandmarkSet> sets, bool with_targets) const;

  /// Branch outputs (normalized target units) for the selected rows.
  std::vector<Tensor> forward(const EncodedSet& data, std::span<const std::size_t> rows, Mode mode);
  /// Backpropagates d loss / d branch through every unit.
  void backward(std::span<const Tensor> branch_grads);
  /// Scaled KL of all variational layers; accumulates its gradient.
  double regularize(double scale);

  Prediction predict(const LandmarkSet& set);
  std::vector<Prediction> predict(std::span<const LandmarkSet> sets);
  /// Terminal prediction converted to millimetres with the subject spacing.
  std::map<LandmarkName, Vec3> predict_mm(const LandmarkSet& set);

  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  /// Parameters and buffers of every unit, keyed by hierarchical name.
  std::vector<NamedTensor> state_tensors();
  Rng& rng() { return rng_; }

 private:
  RrnModel() = default;
  void init_store();
  Prediction to_prediction(std::span<const Tensor> branches, std::size_t row) const;

  RrnConfig config_;
  std::uint64_t seed_ = 0;
  std::vector<LandmarkName> inputs_;  // canonical order
  std::vector<PairKey> pairs_;        // canonical order
  std::map<PairKey, std::unique_ptr<Sequential>> pairwise_;
  std::unique_ptr<Sequential> shared_unit_;
  std::map<LandmarkName, std::unique_ptr<Sequential>> fusion_;
  std::map<PairKey, AffineNormalizer> feature_norm_;
  AffineNormalizer target_norm_;
  std::vector<LandmarkName> mandibular_inputs_;
  ParamStore store_;
  Rng rng_;
  std::size_t last_batch_ = 0;
};

}  // namespace rrn
