#include "rrn/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "rrn/error.hpp"

namespace rrn {
namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_shape(const std::vector<std::size_t>& shape) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
  }
}

}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  values_.assign(product(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_shape(shape_);
  if (values_.size() != product(shape_)) {
    throw ShapeError("tensor of shape " + shape_string(shape_) + " cannot hold " + std::to_string(values_.size()) +
                     " values");
  }
}

Tensor Tensor::from_matrix(const RowMatrix& m) {
  Tensor t(std::vector<std::size_t>{std::size_t(m.rows()), std::size_t(m.cols())});
  t.matrix() = m;
  return t;
}

void Tensor::ensure_grad() {
  if (grad_.size() != values_.size()) grad_.assign(values_.size(), 0.0);
}

void Tensor::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

}  // namespace rrn
