#include "rrn/dropout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rrn {
namespace {

// Sparse variational dropout fit of -KL for a log-uniform prior.
constexpr double kK1 = 0.63576;
constexpr double kK2 = 1.87320;
constexpr double kK3 = 1.48695;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

}  // namespace

std::vector<std::size_t> targeted_set(std::span<const double> weights, double gamma) {
  const auto count = static_cast<std::size_t>(std::floor(gamma * static_cast<double>(weights.size())));
  std::vector<std::size_t> idx(weights.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count == 0) return {};
  auto less = [&](std::size_t a, std::size_t b) {
    const double wa = std::abs(weights[a]);
    const double wb = std::abs(weights[b]);
    return wa < wb || (wa == wb && a < b);
  };
  if (count < idx.size()) std::nth_element(idx.begin(), idx.begin() + count, idx.end(), less);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<double> targeted_dropout_mask(std::span<const double> weights, double gamma, double alpha, Rng& rng) {
  std::vector<double> mask(weights.size(), 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (auto i : targeted_set(weights, gamma)) {
    if (uniform(rng) < alpha) mask[i] = 0.0;
  }
  return mask;
}

std::vector<double> dropout_targeted(std::span<const double> weights, double gamma, double alpha, Rng& rng) {
  auto mask = targeted_dropout_mask(weights, gamma, alpha, rng);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] *= weights[i];
  return mask;
}

double gaussian_dropout_kl(double log_alpha) {
  return kK1 - kK1 * sigmoid(kK2 + kK3 * log_alpha) + 0.5 * softplus(-log_alpha);
}

double gaussian_dropout_kl_grad(double log_alpha) {
  const double s = sigmoid(kK2 + kK3 * log_alpha);
  return -kK1 * kK3 * s * (1.0 - s) - 0.5 * sigmoid(-log_alpha);
}

GaussianDropoutResult dropout_variational(std::span<const double> values, double log_alpha, Rng& rng) {
  GaussianDropoutResult out;
  out.values.assign(values.begin(), values.end());
  const double sd = std::exp(0.5 * log_alpha);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : out.values) v *= 1.0 + sd * normal(rng);
  out.kl = gaussian_dropout_kl(log_alpha) * static_cast<double>(values.size());
  return out;
}

}  // namespace rrn
