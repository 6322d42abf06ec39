#include "rrn/layers.hpp"

#include <cmath>
#include <string>

#include "rrn/dropout.hpp"
#include "rrn/error.hpp"

namespace rrn {
namespace {

void check_input(const char* layer, const Tensor& input, std::size_t width) {
  if (input.shape().size() != 2 || input.cols() != width) {
    throw ShapeError(std::string(layer) + ": expected input shape (batch, " + std::to_string(width) + "), got " +
                     shape_string(input.shape()));
  }
}

void check_grad(const char* layer, const Tensor& grad, std::size_t rows, std::size_t width) {
  if (grad.shape().size() != 2 || grad.rows() != rows || grad.cols() != width) {
    throw ShapeError(std::string(layer) + ": expected gradient shape (" + std::to_string(rows) + ", " +
                     std::to_string(width) + "), got " + shape_string(grad.shape()));
  }
}

void require_cache(const char* layer, bool has_cache) {
  if (!has_cache) throw StateError(std::string(layer) + ": backward called without a train-mode forward");
}

std::vector<NamedTensor> prefixed(std::vector<NamedTensor> items, const std::string& prefix) {
  for (auto& item : items) item.name = prefix + item.name;
  return items;
}

}  // namespace

// Sequential ------------------------------------------------------------------

Sequential::Sequential(const std::vector<LayerSpec>& specs, std::size_t input_dim, Rng& init_rng)
    : input_dim_(input_dim), output_dim_(input_dim) {
  std::optional<TargetedDropoutSpec> pending;
  for (const auto& spec : specs) {
    validate(spec);
    if (const auto* t = std::get_if<DropoutTargetedSpec>(&spec.kind)) {
      pending = t->params;
      continue;
    }
    LayerSpec effective = spec;
    if (pending) {
      if (auto* fc = std::get_if<FullyConnectedSpec>(&effective.kind)) {
        fc->targeted = pending;
      } else if (auto* db = std::get_if<DenseBlockSpec>(&effective.kind)) {
        db->targeted = pending;
      } else {
        throw ConfigError("DropoutTargeted must precede a FullyConnected or DenseBlock layer");
      }
      pending.reset();
    }
    output_dim_ = output_width(effective, output_dim_);
    layers_.push_back(make_layer(effective, layers_.empty() ? input_dim_ : layers_.back()->output_dim(), init_rng));
  }
  if (pending) throw ConfigError("DropoutTargeted must precede a FullyConnected or DenseBlock layer");
}

Tensor Sequential::forward(const Tensor& input, Mode mode, Rng& rng) {
  check_input("Sequential", input, input_dim_);
  ready_for_backward_ = false;
  Tensor x = input;
  for (auto& layer : layers_) x = layer->forward(x, mode, rng);
  ready_for_backward_ = mode == Mode::Train;
  return x;
}

Tensor Sequential::backward(const Tensor& grad_output) {
  require_cache("Sequential", ready_for_backward_);
  Tensor g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  ready_for_backward_ = false;
  return g;
}

std::vector<LayerSpec> Sequential::specs() const {
  std::vector<LayerSpec> out;
  out.reserve(layers_.size());
  for (const auto& layer : layers_) out.push_back(layer->spec());
  return out;
}

std::vector<NamedTensor> Sequential::parameters() {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (auto& p : prefixed(layers_[i]->parameters(), std::to_string(i) + ".")) out.push_back(p);
  }
  return out;
}

std::vector<NamedTensor> Sequential::buffers() {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (auto& p : prefixed(layers_[i]->buffers(), std::to_string(i) + ".")) out.push_back(p);
  }
  return out;
}

double Sequential::regularize(double scale) {
  double total = 0.0;
  for (auto& layer : layers_) total += layer->regularize(scale);
  return total;
}

void Sequential::reset_parameters(Rng& rng) {
  for (auto& layer : layers_) layer->reset_parameters(rng);
}

std::size_t Sequential::parameter_count() {
  std::size_t n = 0;
  for (auto& p : parameters()) n += p.tensor->size();
  return n;
}

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, std::size_t input_dim, Rng& init_rng) {
  validate(spec);
  output_width(spec, input_dim);
  if (const auto* s = std::get_if<FullyConnectedSpec>(&spec.kind)) {
    auto fc = std::make_unique<FullyConnected>(s->in, s->out, init_rng);
    fc->set_targeted_dropout(s->targeted);
    return fc;
  }
  if (const auto* s = std::get_if<BatchNormSpec>(&spec.kind)) {
    return std::make_unique<BatchNorm>(s->dim, s->momentum, s->eps);
  }
  if (std::holds_alternative<ReLUSpec>(spec.kind)) return std::make_unique<ReLU>(input_dim);
  if (const auto* s = std::get_if<ConcatSpec>(&spec.kind)) {
    return std::make_unique<Concat>(Sequential(s->inner, input_dim, init_rng));
  }
  if (const auto* s = std::get_if<DenseBlockSpec>(&spec.kind)) return std::make_unique<DenseBlock>(*s, init_rng);
  if (const auto* s = std::get_if<DropoutRegularSpec>(&spec.kind)) {
    return std::make_unique<DropoutRegular>(input_dim, s->p);
  }
  if (const auto* s = std::get_if<DropoutVariationalSpec>(&spec.kind)) {
    return std::make_unique<DropoutVariational>(input_dim, s->init_log_alpha);
  }
  throw ConfigError("DropoutTargeted acts on the weights of the following layer and cannot stand alone");
}

// FullyConnected --------------------------------------------------------------

FullyConnected::FullyConnected(std::size_t in, std::size_t out, Rng& init_rng)
    : in_(in), out_(out), weight_(in, out), bias_(1, out) {
  reset_parameters(init_rng);
}

void FullyConnected::reset_parameters(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  for (auto& w : weight_.values()) w = uniform(rng);
  for (auto& b : bias_.values()) b = uniform(rng);
}

Tensor FullyConnected::forward(const Tensor& input, Mode mode, Rng& rng) {
  check_input("FullyConnected", input, in_);
  Tensor out(input.rows(), out_);
  mask_.clear();
  if (mode == Mode::Train && targeted_) {
    mask_ = targeted_dropout_mask(weight_.values(), targeted_->gamma, targeted_->alpha, rng);
    const RowMatrix masked = weight_.matrix().cwiseProduct(ConstMatrixMap(mask_.data(), in_, out_));
    out.matrix().noalias() = input.matrix() * masked;
  } else {
    out.matrix().noalias() = input.matrix() * weight_.matrix();
  }
  out.matrix().rowwise() += bias_.matrix().row(0);
  has_cache_ = mode == Mode::Train;
  if (has_cache_) cached_input_ = input.matrix();
  return out;
}

Tensor FullyConnected::backward(const Tensor& grad_output) {
  require_cache("FullyConnected", has_cache_);
  check_grad("FullyConnected", grad_output, cached_input_.rows(), out_);
  weight_.ensure_grad();
  bias_.ensure_grad();
  const auto g = grad_output.matrix();
  Tensor grad_input(cached_input_.rows(), in_);
  if (!mask_.empty()) {
    const ConstMatrixMap mask(mask_.data(), in_, out_);
    weight_.grad_matrix() += (cached_input_.transpose() * g).cwiseProduct(mask);
    grad_input.matrix().noalias() = g * weight_.matrix().cwiseProduct(mask).transpose();
  } else {
    weight_.grad_matrix().noalias() += cached_input_.transpose() * g;
    grad_input.matrix().noalias() = g * weight_.matrix().transpose();
  }
  bias_.grad_matrix() += g.colwise().sum();
  has_cache_ = false;
  return grad_input;
}

LayerSpec FullyConnected::spec() const { return {FullyConnectedSpec{in_, out_, targeted_}}; }

std::vector<NamedTensor> FullyConnected::parameters() { return {{"weight", &weight_}, {"bias", &bias_}}; }

// BatchNorm -------------------------------------------------------------------

BatchNorm::BatchNorm(std::size_t dim, double momentum, double eps)
    : dim_(dim),
      momentum_(momentum),
      eps_(eps),
      gamma_(1, dim, 1.0),
      beta_(1, dim, 0.0),
      running_mean_(1, dim, 0.0),
      running_var_(1, dim, 1.0) {}

void BatchNorm::reset_parameters(Rng&) {
  for (auto& v : gamma_.values()) v = 1.0;
  for (auto& v : beta_.values()) v = 0.0;
  for (auto& v : running_mean_.values()) v = 0.0;
  for (auto& v : running_var_.values()) v = 1.0;
}

Tensor BatchNorm::forward(const Tensor& input, Mode mode, Rng&) {
  check_input("BatchNorm", input, dim_);
  const auto x = input.matrix();
  Tensor out(input.rows(), dim_);
  auto y = out.matrix();
  if (mode == Mode::Eval) {
    const Eigen::RowVectorXd inv = (running_var_.matrix().row(0).array() + eps_).rsqrt().matrix();
    y = ((x.rowwise() - running_mean_.matrix().row(0)).array().rowwise() * inv.array()).matrix();
    y = (y.array().rowwise() * gamma_.matrix().row(0).array()).matrix();
    y.rowwise() += beta_.matrix().row(0);
    has_cache_ = false;
    return out;
  }
  const double n = static_cast<double>(x.rows());
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const RowMatrix centered = x.rowwise() - mean;
  const Eigen::RowVectorXd var = centered.array().square().colwise().sum().matrix() / n;
  inv_std_ = (var.array() + eps_).rsqrt().matrix();
  normalized_ = (centered.array().rowwise() * inv_std_.array()).matrix();
  y = (normalized_.array().rowwise() * gamma_.matrix().row(0).array()).matrix();
  y.rowwise() += beta_.matrix().row(0);

  const double unbias = x.rows() > 1 ? n / (n - 1.0) : 1.0;
  running_mean_.matrix().row(0) = momentum_ * running_mean_.matrix().row(0) + (1.0 - momentum_) * mean;
  running_var_.matrix().row(0) = momentum_ * running_var_.matrix().row(0) + (1.0 - momentum_) * unbias * var;
  has_cache_ = true;
  return out;
}

Tensor BatchNorm::backward(const Tensor& grad_output) {
  require_cache("BatchNorm", has_cache_);
  check_grad("BatchNorm", grad_output, normalized_.rows(), dim_);
  gamma_.ensure_grad();
  beta_.ensure_grad();
  const auto g = grad_output.matrix();
  const double n = static_cast<double>(g.rows());
  gamma_.grad_matrix().row(0) += g.cwiseProduct(normalized_).colwise().sum();
  beta_.grad_matrix().row(0) += g.colwise().sum();

  const RowMatrix dxhat = (g.array().rowwise() * gamma_.matrix().row(0).array()).matrix();
  const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
  const Eigen::RowVectorXd sum_dxhat_xhat = dxhat.cwiseProduct(normalized_).colwise().sum();
  Tensor grad_input(g.rows(), dim_);
  RowMatrix inner = (dxhat * n).rowwise() - sum_dxhat;
  inner -= (normalized_.array().rowwise() * sum_dxhat_xhat.array()).matrix();
  grad_input.matrix() = (inner.array().rowwise() * (inv_std_.array() / n)).matrix();
  has_cache_ = false;
  return grad_input;
}

LayerSpec BatchNorm::spec() const { return {BatchNormSpec{dim_, momentum_, eps_}}; }

std::vector<NamedTensor> BatchNorm::parameters() { return {{"gamma", &gamma_}, {"beta", &beta_}}; }

std::vector<NamedTensor> BatchNorm::buffers() {
  return {{"running_mean", &running_mean_}, {"running_var", &running_var_}};
}

// ReLU ------------------------------------------------------------------------

Tensor ReLU::forward(const Tensor& input, Mode mode, Rng&) {
  check_input("ReLU", input, dim_);
  Tensor out(input.rows(), dim_);
  out.matrix() = input.matrix().cwiseMax(0.0);
  has_cache_ = mode == Mode::Train;
  if (has_cache_) cached_input_ = input.matrix();
  return out;
}

Tensor ReLU::backward(const Tensor& grad_output) {
  require_cache("ReLU", has_cache_);
  check_grad("ReLU", grad_output, cached_input_.rows(), dim_);
  Tensor grad_input(cached_input_.rows(), dim_);
  grad_input.matrix() = (cached_input_.array() > 0.0).select(grad_output.matrix(), 0.0);
  has_cache_ = false;
  return grad_input;
}

// Concat ----------------------------------------------------------------------

Concat::Concat(Sequential inner) : inner_(std::move(inner)) {}

Tensor Concat::forward(const Tensor& input, Mode mode, Rng& rng) {
  check_input("Concat", input, inner_.input_dim());
  const Tensor branch = inner_.forward(input, mode, rng);
  Tensor out(input.rows(), output_dim());
  out.matrix().leftCols(input.cols()) = input.matrix();
  out.matrix().rightCols(branch.cols()) = branch.matrix();
  return out;
}

Tensor Concat::backward(const Tensor& grad_output) {
  const std::size_t in = inner_.input_dim();
  if (grad_output.cols() != output_dim()) {
    throw ShapeError("Concat: expected gradient width " + std::to_string(output_dim()) + ", got " +
                     shape_string(grad_output.shape()));
  }
  const Tensor inner_grad =
      inner_.backward(Tensor::from_matrix(grad_output.matrix().rightCols(inner_.output_dim())));
  Tensor grad_input(grad_output.rows(), in);
  grad_input.matrix() = grad_output.matrix().leftCols(in) + inner_grad.matrix();
  return grad_input;
}

LayerSpec Concat::spec() const { return {ConcatSpec{inner_.specs()}}; }

// DenseBlock ------------------------------------------------------------------

namespace {

std::vector<LayerSpec> dense_block_body(const DenseBlockSpec& spec) {
  std::vector<LayerSpec> body;
  std::size_t width = spec.in;
  for (std::size_t i = 0; i < spec.layers; ++i) {
    body.push_back({ConcatSpec{{
        {FullyConnectedSpec{width, spec.growth, spec.targeted}},
        {BatchNormSpec{spec.growth}},
        {ReLUSpec{}},
    }}});
    width += spec.growth;
  }
  return body;
}

}  // namespace

DenseBlock::DenseBlock(const DenseBlockSpec& spec, Rng& init_rng)
    : spec_(spec), body_(dense_block_body(spec), spec.in, init_rng) {}

// DropoutRegular --------------------------------------------------------------

DropoutRegular::DropoutRegular(std::size_t dim, double p) : dim_(dim), p_(p) {}

Tensor DropoutRegular::forward(const Tensor& input, Mode mode, Rng& rng) {
  check_input("DropoutRegular", input, dim_);
  if (mode == Mode::Eval) {
    has_cache_ = false;
    return input;
  }
  mask_.resize(input.rows(), dim_);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p_);
  for (Eigen::Index r = 0; r < mask_.rows(); ++r) {
    for (Eigen::Index c = 0; c < mask_.cols(); ++c) mask_(r, c) = uniform(rng) < p_ ? 0.0 : keep_scale;
  }
  Tensor out(input.rows(), dim_);
  out.matrix() = input.matrix().cwiseProduct(mask_);
  has_cache_ = true;
  return out;
}

Tensor DropoutRegular::backward(const Tensor& grad_output) {
  require_cache("DropoutRegular", has_cache_);
  check_grad("DropoutRegular", grad_output, mask_.rows(), dim_);
  Tensor grad_input(mask_.rows(), dim_);
  grad_input.matrix() = grad_output.matrix().cwiseProduct(mask_);
  has_cache_ = false;
  return grad_input;
}

// DropoutVariational ----------------------------------------------------------

DropoutVariational::DropoutVariational(std::size_t dim, double init_log_alpha)
    : dim_(dim), init_log_alpha_(init_log_alpha), log_alpha_(1, 1, init_log_alpha) {}

void DropoutVariational::reset_parameters(Rng&) { log_alpha_[0] = init_log_alpha_; }

Tensor DropoutVariational::forward(const Tensor& input, Mode mode, Rng& rng) {
  check_input("DropoutVariational", input, dim_);
  if (mode == Mode::Eval) {
    has_cache_ = false;
    return input;
  }
  noise_.resize(input.rows(), dim_);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index r = 0; r < noise_.rows(); ++r) {
    for (Eigen::Index c = 0; c < noise_.cols(); ++c) noise_(r, c) = normal(rng);
  }
  const double sd = std::exp(0.5 * log_alpha_[0]);
  cached_input_ = input.matrix();
  Tensor out(input.rows(), dim_);
  out.matrix() = cached_input_.cwiseProduct((noise_.array() * sd + 1.0).matrix());
  has_cache_ = true;
  return out;
}

Tensor DropoutVariational::backward(const Tensor& grad_output) {
  require_cache("DropoutVariational", has_cache_);
  check_grad("DropoutVariational", grad_output, noise_.rows(), dim_);
  log_alpha_.ensure_grad();
  const double sd = std::exp(0.5 * log_alpha_[0]);
  const auto g = grad_output.matrix();
  Tensor grad_input(noise_.rows(), dim_);
  grad_input.matrix() = g.cwiseProduct((noise_.array() * sd + 1.0).matrix());
  // d/d(log alpha) of x * sqrt(alpha) * z is 0.5 * x * sqrt(alpha) * z.
  log_alpha_.grad()[0] += 0.5 * sd * (g.array() * cached_input_.array() * noise_.array()).sum();
  has_cache_ = false;
  return grad_input;
}

double DropoutVariational::regularize(double scale) {
  log_alpha_.ensure_grad();
  const double units = static_cast<double>(dim_);
  log_alpha_.grad()[0] += scale * units * gaussian_dropout_kl_grad(log_alpha_[0]);
  return scale * units * gaussian_dropout_kl(log_alpha_[0]);
}

}  // namespace rrn
