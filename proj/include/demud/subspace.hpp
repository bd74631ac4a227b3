#pragma once

#include <cstddef>
#include <span>

#include "demud/feature_matrix.hpp"

namespace demud {

/// Knowledge model of the items seen so far: an orthonormal basis of the
/// mean-centered data, its singular values, the running mean and the number
/// of incorporated items.
///
/// Models are immutable values. `update` returns a new model.
class SubspaceModel {
 public:
  /// Relative cutoff below which singular values are discarded.
  static constexpr double kRankTolerance = 1e-10;
  /// Orthonormality drift that triggers re-orthonormalization after update.
  static constexpr double kOrthoTolerance = 1e-10;

  SubspaceModel(Matrix basis, Vector singular_values, Vector mean, std::size_t count,
                std::size_t cap);

  const Matrix& basis() const { return basis_; }
  const Vector& singular_values() const { return singular_values_; }
  const Vector& mean() const { return mean_; }
  std::size_t count() const { return count_; }
  std::size_t cap() const { return cap_; }

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  std::size_t rank() const { return static_cast<std::size_t>(basis_.cols()); }

 private:
  Matrix basis_;
  Vector singular_values_;
  Vector mean_;
  std::size_t count_;
  std::size_t cap_;
};

/// Thin SVD of the mean-centered data, truncated to min(cap, numerical rank).
/// Wide data (d > n) is decomposed through the n-by-n Gram matrix.
/// cap = 0 yields a mean-only model.
SubspaceModel fit_batch(const FeatureMatrix& X, std::size_t cap);
SubspaceModel fit_batch(const Eigen::Ref<const RowMatrix>& X, std::size_t cap);

/// Model holding a single item: mean = x, no basis vectors.
SubspaceModel init_singleton(const ConstVectorRef& x, std::size_t cap);

/// Incorporates one more item, tracking the mean shift so the basis stays
/// the SVD of the centered data of all incorporated items.
SubspaceModel update(const SubspaceModel& model, const ConstVectorRef& x);

/// U U^T (x - mean) + mean.
Vector reconstruct(const SubspaceModel& model, const ConstVectorRef& x);

/// x - reconstruct(model, x).
Vector residual(const SubspaceModel& model, const ConstVectorRef& x);

/// Euclidean norm of the residual (reconstruction error).
double score(const SubspaceModel& model, const ConstVectorRef& x);

/// score() for every row of X. Rows are evaluated independently with a
/// fixed reduction order, so the result does not depend on DEMUD_THREADS.
Vector score_all(const SubspaceModel& model, const FeatureMatrix& X);
Vector score_all(const SubspaceModel& model, const Eigen::Ref<const RowMatrix>& X);

/// score() for the listed rows only; out[j] receives the score of rows[j].
void score_rows(const SubspaceModel& model, const Eigen::Ref<const RowMatrix>& X,
                std::span<const std::size_t> rows, std::span<double> out);

/// Sequential left-to-right sum of squares, then sqrt.
double euclidean_norm(const ConstVectorRef& v);

/// max |U^T U - I|.
double orthonormality_error(const Matrix& basis);

}  // namespace demud
