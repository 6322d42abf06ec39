#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rrn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

/// Dense row-major real tensor with an optional gradient buffer of the same
/// shape. Layers treat axis 0 as the batch axis and flatten the rest.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : Tensor(std::vector<std::size_t>{rows, cols}, fill) {}
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor from_matrix(const RowMatrix& m);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return rows() == 0 ? 0 : size() / rows(); }
  bool empty() const { return values_.empty(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  MatrixMap matrix() { return {values_.data(), Eigen::Index(rows()), Eigen::Index(cols())}; }
  ConstMatrixMap matrix() const { return {values_.data(), Eigen::Index(rows()), Eigen::Index(cols())}; }

  bool has_grad() const { return !grad_.empty(); }
  /// Allocates a zeroed gradient buffer if none exists.
  void ensure_grad();
  void zero_grad();
  std::span<double> grad() { return grad_; }
  std::span<const double> grad() const { return grad_; }
  MatrixMap grad_matrix() { return {grad_.data(), Eigen::Index(rows()), Eigen::Index(cols())}; }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
  std::vector<double> grad_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace rrn
