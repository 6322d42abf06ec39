#include "rrn/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rrn/error.hpp"
#include "rrn/geometry.hpp"

namespace rrn {
namespace {

void put(PairwiseFeature& f, std::size_t at, const Vec3& v) {
  f[at] = v.x();
  f[at + 1] = v.y();
  f[at + 2] = v.z();
}

void put(PairwiseFeature& f, std::size_t at, const SphericalVec& s) {
  f[at] = s.r;
  f[at + 1] = s.theta;
  f[at + 2] = s.phi;
}

}  // namespace

PairwiseFeature pairwise_features(const LandmarkSet& set, LandmarkName a, LandmarkName b, double d1) {
  if (a == b) {
    throw InvalidInput("pairwise_features: pair (" + std::string(to_string(a)) + ", " +
                       std::string(to_string(b)) + ") is not a pair of distinct landmarks");
  }
  const Vec3& me = set.at(LandmarkName::Me);
  const Vec3& pa = set.at(a);
  const Vec3& pb = set.at(b);

  PairwiseFeature f{};
  put(f, 0, pa);
  put(f, 3, to_spherical(pa - me));
  put(f, 6, pb);
  put(f, 9, to_spherical(pb - me));
  put(f, 12, me);
  put(f, 15, to_spherical(pb - pa));
  f[18] = d1;
  return f;
}

AffineNormalizer::AffineNormalizer(std::size_t dim) : shift_(dim, 0.0), scale_(dim, 1.0) {}

AffineNormalizer::AffineNormalizer(std::vector<double> shift, std::vector<double> scale)
    : shift_(std::move(shift)), scale_(std::move(scale)) {
  if (shift_.size() != scale_.size()) throw ShapeError("AffineNormalizer: shift/scale width mismatch");
}

AffineNormalizer AffineNormalizer::fit(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw InvalidInput("AffineNormalizer::fit: empty collection");
  const std::size_t dim = rows.front().size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& row : rows) {
    if (row.size() != dim) throw ShapeError("AffineNormalizer::fit: ragged rows");
    for (std::size_t c = 0; c < dim; ++c) mean[c] += row[c];
  }
  const double n = static_cast<double>(rows.size());
  for (auto& m : mean) m /= n;
  std::vector<double> var(dim, 0.0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < dim; ++c) var[c] += (row[c] - mean[c]) * (row[c] - mean[c]);
  }
  std::vector<double> scale(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    const double sd = std::sqrt(var[c] / n);
    scale[c] = sd < kStdFloor ? 1.0 : 1.0 / sd;
  }
  return AffineNormalizer(std::move(mean), std::move(scale));
}

AffineNormalizer AffineNormalizer::fit_features(std::span<const PairwiseFeature> rows) {
  std::vector<std::vector<double>> as_rows;
  as_rows.reserve(rows.size());
  for (const auto& r : rows) as_rows.emplace_back(r.begin(), r.end());
  return fit(as_rows);
}

void AffineNormalizer::apply(std::span<double> values) const {
  if (values.size() != dim()) throw ShapeError("AffineNormalizer::apply: width mismatch");
  for (std::size_t c = 0; c < values.size(); ++c) values[c] = (values[c] - shift_[c]) * scale_[c];
}

void AffineNormalizer::invert(std::span<double> values) const {
  if (values.size() != dim()) throw ShapeError("AffineNormalizer::invert: width mismatch");
  for (std::size_t c = 0; c < values.size(); ++c) values[c] = values[c] / scale_[c] + shift_[c];
}

std::vector<PairRow> pairwise_table(const LandmarkSet& set, std::span<const LandmarkName> inputs) {
  std::vector<LandmarkName> mandibular;
  for (auto name : inputs) {
    if (is_mandibular(name)) mandibular.push_back(name);
  }
  const double d1 = mandible_diagonal(set, mandibular);
  std::vector<PairRow> rows;
  for (auto a : inputs) {
    for (auto b : inputs) {
      if (a != b) rows.push_back({a, b, pairwise_features(set, a, b, d1)});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const PairRow& x, const PairRow& y) {
    return std::pair(to_string(x.a), to_string(x.b)) < std::pair(to_string(y.a), to_string(y.b));
  });
  return rows;
}

}  // namespace rrn
