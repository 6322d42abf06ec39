#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rrn/layers.hpp"

namespace rrn {

struct AdamSettings {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
};

/// Trainable tensors of a model together with their Adam moments.
class ParamStore {
 public:
  ParamStore() = default;
  explicit ParamStore(std::vector<NamedTensor> params);

  std::size_t size() const { return params_.size(); }
  const NamedTensor& param(std::size_t i) const { return params_.at(i); }
  const std::vector<NamedTensor>& params() const { return params_; }
  AdamState& state(std::size_t i) { return state_.at(i); }
  const AdamState& state(std::size_t i) const { return state_.at(i); }
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<NamedTensor> params_;
  std::vector<AdamState> state_;
  std::int64_t step_ = 0;
};

/// One Adam update over every parameter in the store using the gradients
/// held by the tensors. Throws TrainingError naming the parameter when a
/// gradient is non-finite; nothing is updated in that case.
void adam_step(ParamStore& store, const AdamSettings& settings);

}  // namespace rrn
