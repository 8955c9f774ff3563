#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lazsl/error.hpp"

namespace lazsl {

/// Dense row-major matrix of doubles. The tag parameter keeps similarity,
/// cost and plan matrices from being mixed up at call sites; convert with
/// `retag` when the algebra genuinely calls for it.
template <class Tag>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      raise(ErrorCode::ShapeMismatch, "matrix buffer has " + std::to_string(data_.size()) +
                                          " entries, expected " + std::to_string(rows_ * cols_));
  }

  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) raise(ErrorCode::ShapeMismatch, "ragged matrix literal");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  [[nodiscard]] std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }

  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
  [[nodiscard]] std::span<double> data() noexcept { return data_; }

  [[nodiscard]] std::vector<double> row_sums() const {
    std::vector<double> out(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out[i] += (*this)(i, j);
    return out;
  }

  [[nodiscard]] std::vector<double> col_sums() const {
    std::vector<double> out(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out[j] += (*this)(i, j);
    return out;
  }

  [[nodiscard]] DenseMatrix transposed() const {
    DenseMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
    return out;
  }

  template <class OtherTag>
  [[nodiscard]] DenseMatrix<OtherTag> retag() const {
    return DenseMatrix<OtherTag>(rows_, cols_, data_);
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct SimilarityTag {};
struct CostTag {};
struct PlanTag {};

using SimilarityMatrix = DenseMatrix<SimilarityTag>;
using CostMatrix = DenseMatrix<CostTag>;
using PlanMatrix = DenseMatrix<PlanTag>;

/// Frobenius inner product of two equally shaped matrices.
template <class A, class B>
[[nodiscard]] double frobenius(const DenseMatrix<A>& a, const DenseMatrix<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    raise(ErrorCode::ShapeMismatch, "frobenius product of " + std::to_string(a.rows()) + "x" +
                                        std::to_string(a.cols()) + " and " + std::to_string(b.rows()) +
                                        "x" + std::to_string(b.cols()));
  const auto x = a.data();
  const auto y = b.data();
  return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

/// Finite feature vector in the shared image/text embedding space.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) raise(ErrorCode::InvalidArgument, "embedding must have at least one entry");
    for (double v : values_)
      if (!std::isfinite(v)) raise(ErrorCode::InvalidArgument, "embedding contains a non-finite entry");
  }
  EmbeddingVector(std::initializer_list<double> values) : EmbeddingVector(std::vector<double>(values)) {}

  [[nodiscard]] std::size_t dim() const noexcept { return values_.size(); }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  [[nodiscard]] double norm() const noexcept {
    // Scaled accumulation so tiny or huge entries do not under/overflow.
    double scale = 0.0;
    for (double v : values_) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0.0;
    double acc = 0.0;
    for (double v : values_) acc += (v / scale) * (v / scale);
    return scale * std::sqrt(acc);
  }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

[[nodiscard]] inline double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim())
    raise(ErrorCode::DimensionMismatch,
          "dimensions " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
  const auto x = a.values();
  const auto y = b.values();
  return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

[[nodiscard]] inline EmbeddingVector normalize(const EmbeddingVector& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) raise(ErrorCode::ZeroVector, "cannot normalize a zero vector");
  std::vector<double> out(v.values().begin(), v.values().end());
  for (double& x : out) x /= n;
  return EmbeddingVector(std::move(out));
}

[[nodiscard]] inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim())
    raise(ErrorCode::DimensionMismatch,
          "dimensions " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) raise(ErrorCode::ZeroVector, "cosine of a zero vector");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) acc += (a[i] / na) * (b[i] / nb);
  return std::clamp(acc, -1.0, 1.0);
}

/// Entry (i, j) is cosine(rows[i], cols[j]).
[[nodiscard]] inline SimilarityMatrix similarity_matrix(std::span<const EmbeddingVector> rows,
                                                        std::span<const EmbeddingVector> cols) {
  if (rows.empty() || cols.empty()) raise(ErrorCode::ShapeMismatch, "similarity of an empty set");
  const std::size_t d = rows.front().dim();
  for (const auto& v : rows)
    if (v.dim() != d) raise(ErrorCode::DimensionMismatch, "row embeddings differ in dimension");
  for (const auto& v : cols)
    if (v.dim() != d)
      raise(ErrorCode::DimensionMismatch, "dimensions " + std::to_string(d) + " and " + std::to_string(v.dim()));

  // Normalize each side once; the pairwise loop is then a plain dot product.
  std::vector<double> q(cols.size() * d);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const auto u = normalize(cols[j]);
    std::copy(u.values().begin(), u.values().end(), q.begin() + static_cast<std::ptrdiff_t>(j * d));
  }
  SimilarityMatrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto p = normalize(rows[i]);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += p[k] * q[j * d + k];
      out(i, j) = std::clamp(acc, -1.0, 1.0);
    }
  }
  return out;
}

namespace detail {

inline std::vector<EmbeddingVector> normalized_all(std::vector<EmbeddingVector> vs) {
  for (auto& v : vs) v = normalize(v);
  return vs;
}

inline void require_common_dim(std::span<const EmbeddingVector> vs, std::size_t dim, const char* what) {
  for (const auto& v : vs)
    if (v.dim() != dim)
      raise(ErrorCode::DimensionMismatch, std::string(what) + " embedding has dimension " +
                                              std::to_string(v.dim()) + ", expected " + std::to_string(dim));
}

}  // namespace detail

/// One item: a whole-image embedding plus its region embeddings. All vectors
/// are normalized on construction, whatever the exporter produced.
class VisionSet {
 public:
  VisionSet(std::string item_id, const EmbeddingVector& global, std::vector<EmbeddingVector> regions)
      : item_id_(std::move(item_id)), global_(normalize(global)) {
    if (regions.empty()) raise(ErrorCode::InvalidArgument, "vision set needs at least one region");
    detail::require_common_dim(regions, global_.dim(), "region");
    regions_ = detail::normalized_all(std::move(regions));
  }

  [[nodiscard]] const std::string& item_id() const noexcept { return item_id_; }
  [[nodiscard]] const EmbeddingVector& global() const noexcept { return global_; }
  [[nodiscard]] std::span<const EmbeddingVector> regions() const noexcept { return regions_; }
  [[nodiscard]] std::size_t num_regions() const noexcept { return regions_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return global_.dim(); }

 private:
  std::string item_id_;
  EmbeddingVector global_;
  std::vector<EmbeddingVector> regions_;
};

struct Attribute {
  std::string text;
  EmbeddingVector embedding;
};

/// Attribute descriptions of one class with their text embeddings.
class SemanticSet {
 public:
  SemanticSet(std::string class_id, std::string class_name, std::vector<Attribute> attributes)
      : class_id_(std::move(class_id)), class_name_(std::move(class_name)) {
    if (attributes.empty()) raise(ErrorCode::InvalidArgument, "semantic set needs at least one attribute");
    const std::size_t d = attributes.front().embedding.dim();
    for (auto& a : attributes) {
      if (a.embedding.dim() != d) raise(ErrorCode::DimensionMismatch, "attribute dimensions differ");
      texts_.push_back(std::move(a.text));
      embeddings_.push_back(normalize(a.embedding));
    }
  }

  [[nodiscard]] const std::string& class_id() const noexcept { return class_id_; }
  [[nodiscard]] const std::string& class_name() const noexcept { return class_name_; }
  [[nodiscard]] std::span<const std::string> texts() const noexcept { return texts_; }
  [[nodiscard]] std::span<const EmbeddingVector> embeddings() const noexcept { return embeddings_; }
  [[nodiscard]] std::size_t num_attributes() const noexcept { return embeddings_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return embeddings_.front().dim(); }

 private:
  std::string class_id_;
  std::string class_name_;
  std::vector<std::string> texts_;
  std::vector<EmbeddingVector> embeddings_;
};

}  // namespace lazsl
