#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "rrn/layer_spec.hpp"
#include "rrn/rng.hpp"
#include "rrn/tensor.hpp"

namespace rrn {

enum class Mode { Train, Eval };

/// A tensor owned by a layer, exposed under a hierarchical name.
struct NamedTensor {
  std::string name;
  Tensor* tensor = nullptr;
};

/// One differentiable transform on a (batch x features) tensor. forward()
/// in train mode caches whatever backward() needs; backward() accumulates
/// parameter gradients and returns the gradient w.r.t. the input.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& input, Mode mode, Rng& rng) = 0;
  virtual Tensor backward(const Tensor& grad_output) = 0;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual LayerSpec spec() const = 0;

  /// Trainable parameters.
  virtual std::vector<NamedTensor> parameters() { return {}; }
  /// Non-trainable state that belongs in a checkpoint (running statistics).
  virtual std::vector<NamedTensor> buffers() { return {}; }

  /// Adds scale * KL to the loss: returns the scaled penalty and accumulates
  /// its gradient into the parameters. Zero for non-variational layers.
  virtual double regularize(double /*scale*/) { return 0.0; }

  /// Re-draws parameters from the default initializer.
  virtual void reset_parameters(Rng& /*rng*/) {}
};

/// Runs a list of layers in order; the body of relation units, dense
/// blocks and concatenation branches. Backward requires a preceding
/// train-mode forward.
class Sequential {
 public:
  Sequential() = default;
  Sequential(const std::vector<LayerSpec>& specs, std::size_t input_dim, Rng& init_rng);

  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  Tensor forward(const Tensor& input, Mode mode, Rng& rng);
  Tensor backward(const Tensor& grad_output);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  std::vector<LayerSpec> specs() const;

  std::vector<NamedTensor> parameters();
  std::vector<NamedTensor> buffers();
  double regularize(double scale);
  void reset_parameters(Rng& rng);

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }

  std::size_t parameter_count();

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  bool ready_for_backward_ = false;
};

/// Builds one layer from its spec for an input of width `input_dim`.
/// DropoutTargeted specs are folded into the following weight layer by
/// Sequential and cannot be built standalone.
std::unique_ptr<Layer> make_layer(const LayerSpec& spec, std::size_t input_dim, Rng& init_rng);

// Concrete layers -----------------------------------------------------------

class FullyConnected : public Layer {
 public:
  FullyConnected(std::size_t in, std::size_t out, Rng& init_rng);

  Tensor forward(const Tensor& input, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_output) override;
  std::size_t input_dim() const override { return in_; }
  std::size_t output_dim() const override { return out_; }
  LayerSpec spec() const override;
  std::vector<NamedTensor> parameters() override;
  void reset_parameters(Rng& rng) override;

  void set_targeted_dropout(std::optional<TargetedDropoutSpec> t) { targeted_ = t; }

  Tensor& weight() { return weight_; }  ///< shape (in, out)
  Tensor& bias() { return bias_; }      ///< shape (1, out)

 private:
  std::size_t in_;
  std::size_t out_;
  Tensor weight_;
  Tensor bias_;
  std::optional<TargetedDropoutSpec> targeted_;
  RowMatrix cached_input_;
  std::vector<double> mask_;  // empty when no weight mask was applied
  bool has_cache_ = false;
};

class BatchNorm : public Layer {
 public:
  BatchNorm(std::size_t dim, double momentum = 0.9, double eps = 1e-5);

  Tensor forward(const Tensor& input, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_output) override;
  std::size_t input_dim() const override { return dim_; }
  std::size_t output_dim() const override { return dim_; }
  LayerSpec spec() const override;
  std::vector<NamedTensor> parameters() override;
  std::vector<NamedTensor> buffers() override;
  void reset_parameters(Rng& rng) override;

  Tensor& running_mean() { return running_mean_; }
  Tensor& running_var() { return running_var_; }

 private:
  std::size_t dim_;
  double momentum_;
  double eps_;
  Tensor gamma_;
  Tensor beta_;
  Tensor running_mean_;
  Tensor running_var_;
  RowMatrix normalized_;
  Eigen::RowVectorXd inv_std_;
  bool has_cache_ = false;
};

class ReLU : public Layer {
 public:
  explicit ReLU(std::size_t dim) : dim_(dim) {}

  Tensor forward(const Tensor& input, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_output) override;
  std::size_t input_dim() const override { return dim_; }
  std::size_t output_dim() const override { return dim_; }
  LayerSpec spec() const override { return {ReLUSpec{}}; }

 private:
  std::size_t dim_;
  RowMatrix cached_input_;
  bool has_cache_ = false;
};

/// Output = [input | inner(input)].
class Concat : public Layer {
 public:
  Concat(Sequential inner);

  Tensor forward(const Tensor& input, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_output) override;
  std::size_t input_dim() const override { return inner_.input_dim(); }
  std::size_t output_dim() const override { return inner_.input_dim() + inner_.output_dim(); }
  LayerSpec spec() const override;
  std::vector<NamedTensor> parameters() override { return inner_.parameters(); }
  std::vector<NamedTensor> buffers() override { return inner_.buffers(); }
  double regularize(double scale) override { return inner_.regularize(scale); }
  void reset_parameters(Rng& rng) override { inner_.reset_parameters(rng); }

 private:
  Sequential inner_;
};

/// Densely connected stack: each layer appends `growth` features computed
/// from everything before it.
class DenseBlock : public Layer {
 public:
  DenseBlock(const DenseBlockSpec& spec, Rng& init_rng);

  Tensor forward(const Tensor& input, Mode mode, Rng& rng) override { return body_.forward(input, mode, rng); }
  Tensor backward(const Tensor& grad_output) override { return body_.backward(grad_output); }
  std::size_t input_dim() const override { return spec_.in; }
  std::size_t output_dim() const override { return spec_.in + spec_.layers * spec_.growth; }
  LayerSpec spec() const override { return {spec_}; }
  std::vector<NamedTensor> parameters() override { return body_.parameters(); }
  std::vector<NamedTensor> buffers() override { return body_.buffers(); }
  void reset_parameters(Rng& rng) override { body_.reset_parameters(rng); }

 private:
  DenseBlockSpec spec_;
  Sequential body_;
};

/// Inverted dropout on activations.
class DropoutRegular : public Layer {
 public:
  DropoutRegular(std::size_t dim, double p);

  Tensor forward(const Tensor& input, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_output) override;
  std::size_t input_dim() const override { return dim_; }
  std::size_t output_dim() const override { return dim_; }
  LayerSpec spec() const override { return {DropoutRegularSpec{p_}}; }

 private:
  std::size_t dim_;
  double p_;
  RowMatrix mask_;  // already divided by the keep probability
  bool has_cache_ = false;
};

/// Gaussian (variational) dropout: y = x * (1 + sqrt(alpha) * z) with one
/// learned log alpha per layer. regularize() adds the KL approximation of
/// the Gaussian dropout posterior summed over the layer's units.
class DropoutVariational : public Layer {
 public:
  DropoutVariational(std::size_t dim, double init_log_alpha);

  Tensor forward(const Tensor& input, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_output) override;
  std::size_t input_dim() const override { return dim_; }
  std::size_t output_dim() const override { return dim_; }
  LayerSpec spec() const override { return {DropoutVariationalSpec{init_log_alpha_}}; }
  std::vector<NamedTensor> parameters() override { return {{"log_alpha", &log_alpha_}}; }
  double regularize(double scale) override;
  void reset_parameters(Rng& rng) override;

  double log_alpha() const { return log_alpha_[0]; }
  Tensor& log_alpha_tensor() { return log_alpha_; }

 private:
  std::size_t dim_;
  double init_log_alpha_;
  Tensor log_alpha_;
  RowMatrix cached_input_;
  RowMatrix noise_;  // standard normal draws z
  bool has_cache_ = false;
};

}  // namespace rrn
