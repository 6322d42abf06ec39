#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rrn/layers.hpp"
#include "rrn/rrn_model.hpp"

namespace rrn::fd {

inline constexpr double kStep = 1e-4;
inline constexpr double kTolerance = 1e-4;

// Norm-wise relative error of one gradient tensor, |a - n| / (|a| + |n|),
// floored for tensors whose true gradient is zero (biases ahead of BatchNorm).
inline double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0, a = 0.0, n = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    a += analytic[i] * analytic[i];
    n += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(a) + std::sqrt(n), 1e-6);
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(rows, cols);
  for (auto& v : t.values()) v = n(rng);
  return t;
}

inline double error_at(std::span<double> values, std::span<const double> grad, const std::function<double()>& loss,
                       double step) {
  std::vector<double> numeric(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + step;
    const double up = loss();
    values[i] = saved - step;
    const double down = loss();
    values[i] = saved;
    numeric[i] = (up - down) / (2 * step);
  }
  return relative_error(grad, numeric);
}

// Relative error between `grad` and central differences of `loss` over
// every entry of `values`. A ReLU kink inside the step's window is retried
// with steps down to kStep / 100.
inline double error(std::span<double> values, std::span<const double> grad, const std::function<double()>& loss) {
  double best = error_at(values, grad, loss, kStep);
  for (double step = kStep / 10; best >= kTolerance && step >= kStep / 100; step /= 10) {
    best = std::min(best, error_at(values, grad, loss, step));
  }
  return best;
}

using Report = std::vector<std::pair<std::string, double>>;

// Input and parameter gradient errors of `net` for the loss
// sum(weights * net(x)) [+ net.regularize(reg_scale)], replaying the same
// random stream in every evaluation.
inline Report check_sequential(Sequential& net, std::size_t batch, std::uint64_t seed, double reg_scale = 0.0) {
  std::mt19937_64 gen(seed);
  Tensor x = random_tensor(batch, net.input_dim(), gen);
  const Tensor weights = random_tensor(batch, net.output_dim(), gen);
  const Rng stream(seed + 1);

  auto loss = [&] {
    Rng rng = stream;
    const Tensor y = net.forward(x, Mode::Train, rng);
    double l = (y.matrix().array() * weights.matrix().array()).sum();
    if (reg_scale > 0.0) {
      l += net.regularize(reg_scale);
      for (auto& p : net.parameters()) p.tensor->zero_grad();
    }
    return l;
  };

  for (auto& p : net.parameters()) {
    p.tensor->ensure_grad();
    p.tensor->zero_grad();
  }
  Rng rng = stream;
  net.forward(x, Mode::Train, rng);
  const Tensor dx = net.backward(weights);
  if (reg_scale > 0.0) net.regularize(reg_scale);

  std::vector<std::vector<double>> grads;
  for (auto& p : net.parameters()) grads.emplace_back(p.tensor->grad().begin(), p.tensor->grad().end());

  Report report{{"input", error(x.values(), dx.values(), loss)}};
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    report.emplace_back(params[i].name, error(params[i].tensor->values(), grads[i], loss));
  }
  return report;
}

// Branch loss (+ scaled KL with variational dropout) of a model on the
// given sets, checked against every parameter.
inline Report check_model(RrnModel& model, std::span<const LandmarkSet> sets, double kl_scale = 0.05) {
  model.fit_normalizers(sets);
  const auto enc = model.encode(sets, true);
  std::vector<std::size_t> rows(sets.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const bool variational = model.config().dropout.mode == DropoutMode::Variational;
  const Rng stream = model.rng();

  auto loss = [&] {
    model.rng() = stream;
    const auto branches = model.forward(enc, rows, Mode::Train);
    double l = branch_loss(branches, enc.targets, nullptr);
    if (variational) l += model.regularize(kl_scale);
    model.params().zero_grad();
    return l;
  };

  model.params().zero_grad();
  model.rng() = stream;
  const auto branches = model.forward(enc, rows, Mode::Train);
  std::vector<Tensor> grads;
  branch_loss(branches, enc.targets, &grads);
  model.backward(grads);
  if (variational) model.regularize(kl_scale);

  std::vector<std::vector<double>> analytic;
  for (const auto& p : model.params().params()) analytic.emplace_back(p.tensor->grad().begin(), p.tensor->grad().end());
  Report report;
  const auto& params = model.params().params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    report.emplace_back(params[i].name, error(params[i].tensor->values(), analytic[i], loss));
  }
  return report;
}

}  // namespace rrn::fd
