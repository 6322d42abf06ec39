#pragma once

#include <span>
#include <vector>

#include "rrn/rng.hpp"

namespace rrn {

/// Indices of the floor(gamma * size) lowest-|w| weights, ties broken by
/// index.
std::vector<std::size_t> targeted_set(std::span<const double> weights, double gamma);

/// 0/1 keep-mask for targeted dropout: each weight in the target set is
/// dropped independently with probability alpha; all others are kept.
std::vector<double> targeted_dropout_mask(std::span<const double> weights, double gamma, double alpha, Rng& rng);

/// Returns the weights with the targeted-dropout mask applied.
std::vector<double> dropout_targeted(std::span<const double> weights, double gamma, double alpha, Rng& rng);

struct GaussianDropoutResult {
  std::vector<double> values;
  double kl = 0.0;  ///< per-unit KL penalty times values.size()
};

/// Multiplicative Gaussian noise N(1, exp(log_alpha)) on every value.
GaussianDropoutResult dropout_variational(std::span<const double> values, double log_alpha, Rng& rng);

/// Approximate KL(q || prior) of one Gaussian-dropout unit as a function of
/// log alpha (Molchanov et al. fit). Decreases monotonically in log alpha
/// and vanishes as log alpha grows.
double gaussian_dropout_kl(double log_alpha);
double gaussian_dropout_kl_grad(double log_alpha);

}  // namespace rrn
