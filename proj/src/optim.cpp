#include "rrn/optim.hpp"

#include <cmath>

#include "rrn/error.hpp"

namespace rrn {

ParamStore::ParamStore(std::vector<NamedTensor> params) : params_(std::move(params)) {
  state_.reserve(params_.size());
  for (auto& p : params_) {
    p.tensor->ensure_grad();
    state_.push_back({std::vector<double>(p.tensor->size(), 0.0), std::vector<double>(p.tensor->size(), 0.0)});
  }
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor->size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) {
    p.tensor->ensure_grad();
    p.tensor->zero_grad();
  }
}

void adam_step(ParamStore& store, const AdamSettings& s) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store.param(i);
    if (!p.tensor->has_grad()) throw StateError("adam_step: parameter '" + p.name + "' has no gradient");
    for (double g : p.tensor->grad()) {
      if (!std::isfinite(g)) throw TrainingError("adam_step: non-finite gradient in parameter '" + p.name + "'");
    }
  }
  store.set_step(store.step() + 1);
  const double t = static_cast<double>(store.step());
  const double bc1 = 1.0 - std::pow(s.beta1, t);
  const double bc2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto values = store.param(i).tensor->values();
    auto grad = store.param(i).tensor->grad();
    auto& st = store.state(i);
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double g = grad[k];
      st.m[k] = s.beta1 * st.m[k] + (1.0 - s.beta1) * g;
      st.v[k] = s.beta2 * st.v[k] + (1.0 - s.beta2) * g * g;
      const double m_hat = st.m[k] / bc1;
      const double v_hat = st.v[k] / bc2;
      values[k] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
    }
  }
}

}  // namespace rrn
