#include "demud/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "demud/error.hpp"
#include "demud/parallel.hpp"

namespace demud {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_dim(const SubspaceModel& model, Eigen::Index size) {
  if (static_cast<std::size_t>(size) != model.dim()) {
    throw DimensionError("vector has length " + std::to_string(size) + " but model dimension is " +
                         std::to_string(model.dim()));
  }
}

// Makes the largest-magnitude entry of every column nonnegative (first index
// wins on ties).
void fix_signs(Matrix& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
      const double a = std::abs(basis(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (basis(arg, j) < 0.0) basis.col(j) *= -1.0;
  }
}

// Number of leading singular values to keep: relative and absolute floors,
// the component cap and the centered-rank bound count - 1.
Eigen::Index kept_rank(const Vector& sv, std::size_t cap, std::size_t count, double floor) {
  if (sv.size() == 0 || count < 2) return 0;
  const double cutoff = std::max(SubspaceModel::kRankTolerance * sv(0), floor);
  const auto limit = static_cast<Eigen::Index>(std::min({cap, count - 1, static_cast<std::size_t>(sv.size())}));
  Eigen::Index k = 0;
  while (k < limit && sv(k) > cutoff) ++k;
  return k;
}

// Row-mean computed as a plain left-to-right sum.
Vector column_mean(const Eigen::Ref<const RowMatrix>& X) {
  Vector mean = Vector::Zero(X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) mean += X.row(i).transpose();
  mean /= static_cast<double>(X.rows());
  return mean;
}

struct Decomposition {
  Matrix basis;
  Vector singular_values;
};

Decomposition thin_svd_tall(const Matrix& centered) {
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  return {svd.matrixV(), svd.singularValues()};
}

// d > n: eigendecompose the n x n Gram matrix, lift the leading eigenvectors
// into feature space and refine them with a Rayleigh-Ritz step on the
// orthonormalized lift. The refinement restores full precision for the
// small singular values that the squared Gram spectrum blurs.
Decomposition thin_svd_wide(const Matrix& centered, double floor) {
  const Matrix gram = centered * centered.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw DataError("Gram eigendecomposition failed");

  const Eigen::Index n = gram.rows();
  Matrix lifted(centered.cols(), n);
  Vector lifted_norms(n);
  Eigen::Index r = 0;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    if (eig.eigenvalues()(i) <= 0.0) break;
    lifted.col(r) = centered.transpose() * eig.eigenvectors().col(i);
    lifted_norms(r) = lifted.col(r).norm();
    ++r;
  }
  if (r == 0) return {Matrix(centered.cols(), 0), Vector(0)};
  const double cutoff = std::max(SubspaceModel::kRankTolerance * lifted_norms.head(r).maxCoeff(), floor);
  Eigen::Index keep = 0;
  for (Eigen::Index i = 0; i < r; ++i) {
    if (lifted_norms(i) > cutoff) lifted.col(keep++) = lifted.col(i);
  }
  if (keep == 0) return {Matrix(centered.cols(), 0), Vector(0)};

  Eigen::HouseholderQR<Matrix> qr(lifted.leftCols(keep));
  const Matrix q = qr.householderQ() * Matrix::Identity(centered.cols(), keep);
  const Matrix projected = q.transpose() * centered.transpose();
  Eigen::JacobiSVD<Matrix> svd(projected, Eigen::ComputeThinU);
  return {q * svd.matrixU(), svd.singularValues()};
}

SubspaceModel make_model(Matrix basis, Vector sv, Eigen::Index k, Vector mean, std::size_t count,
                         std::size_t cap) {
  Matrix kept = basis.leftCols(k);
  fix_signs(kept);
  return SubspaceModel(std::move(kept), sv.head(k), std::move(mean), count, cap);
}

void reorthonormalize(Matrix& basis) {
  Eigen::HouseholderQR<Matrix> qr(basis);
  Matrix q = qr.householderQ() * Matrix::Identity(basis.rows(), basis.cols());
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  basis = std::move(q);
}

Vector reconstruct_owned(const SubspaceModel& model, const Vector& x) {
  if (model.rank() == 0) return model.mean();
  const Vector centered = x - model.mean();
  const Vector coeffs = model.basis().transpose() * centered;
  Vector out(model.dim());
  out.noalias() = model.basis() * coeffs;
  out += model.mean();
  return out;
}

double score_owned(const SubspaceModel& model, const Vector& x) {
  const Vector r = x - reconstruct_owned(model, x);
  return euclidean_norm(r);
}

}  // namespace

SubspaceModel::SubspaceModel(Matrix basis, Vector singular_values, Vector mean, std::size_t count,
                             std::size_t cap)
    : basis_(std::move(basis)),
      singular_values_(std::move(singular_values)),
      mean_(std::move(mean)),
      count_(count),
      cap_(cap) {
  if (basis_.cols() != singular_values_.size()) {
    throw DimensionError("basis column count does not match singular value count");
  }
  if (basis_.cols() > 0 && basis_.rows() != mean_.size()) {
    throw DimensionError("basis row count does not match mean dimension");
  }
}

double euclidean_norm(const ConstVectorRef& v) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) sum += v(i) * v(i);
  return std::sqrt(sum);
}

double orthonormality_error(const Matrix& basis) {
  if (basis.cols() == 0) return 0.0;
  const Matrix gram = basis.transpose() * basis;
  return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

SubspaceModel fit_batch(const FeatureMatrix& X, std::size_t cap) { return fit_batch(X.data(), cap); }

SubspaceModel fit_batch(const Eigen::Ref<const RowMatrix>& X, std::size_t cap) {
  if (X.rows() < 1 || X.cols() < 1) throw DataError("fit_batch needs a non-empty matrix");
  require_finite(X, "fit_batch input");

  const auto n = static_cast<std::size_t>(X.rows());
  Vector mean = column_mean(X);
  if (cap == 0 || n == 1) {
    return SubspaceModel(Matrix(X.cols(), 0), Vector(0), std::move(mean), n, cap);
  }

  const Matrix centered = X.rowwise() - mean.transpose();
  const double max_row_norm = X.rowwise().norm().maxCoeff();
  const double floor = 64.0 * kEps * std::sqrt(static_cast<double>(n)) * max_row_norm;

  Decomposition dec = X.cols() > X.rows() ? thin_svd_wide(centered, floor) : thin_svd_tall(centered);
  const Eigen::Index k = kept_rank(dec.singular_values, cap, n, floor);
  return make_model(std::move(dec.basis), std::move(dec.singular_values), k, std::move(mean), n, cap);
}

SubspaceModel init_singleton(const ConstVectorRef& x, std::size_t cap) {
  if (x.size() < 1) throw DimensionError("init_singleton needs a non-empty vector");
  require_finite(x, "init_singleton input");
  return SubspaceModel(Matrix(x.size(), 0), Vector(0), Vector(x), 1, cap);
}

SubspaceModel update(const SubspaceModel& model, const ConstVectorRef& x_in) {
  require_dim(model, x_in.size());
  require_finite(x_in, "update input");
  const Vector x = x_in;

  const std::size_t count = model.count();
  const auto n_old = static_cast<double>(count);
  const auto n_new = static_cast<double>(count + 1);
  Vector mean = (n_old * model.mean() + x) / n_new;
  if (model.cap() == 0) {
    return SubspaceModel(Matrix(model.dim(), 0), Vector(0), std::move(mean), count + 1, model.cap());
  }

  // Single new column: its own centered part vanishes, leaving only the
  // scaled mean-shift direction.
  const Vector shift = std::sqrt(n_old / n_new) * (x - model.mean());
  const Matrix& basis = model.basis();
  const Eigen::Index k = basis.cols();

  Vector coeffs = basis.transpose() * shift;
  Vector orth = shift - basis * coeffs;
  if (k > 0) {
    const Vector again = basis.transpose() * orth;
    coeffs += again;
    orth -= basis * again;
  }
  double orth_norm = euclidean_norm(orth);

  const double s_max = k > 0 ? model.singular_values()(0) : 0.0;
  const double scale = std::max({s_max, euclidean_norm(shift)});
  const double floor = 64.0 * kEps * std::sqrt(n_new) *
                       std::max(euclidean_norm(model.mean()), euclidean_norm(x));
  const bool new_direction = orth_norm > SubspaceModel::kRankTolerance * scale && orth_norm > floor;

  const Eigen::Index m = new_direction ? k + 1 : k;
  if (m == 0) {
    return SubspaceModel(Matrix(model.dim(), 0), Vector(0), std::move(mean), count + 1, model.cap());
  }
  Matrix core = Matrix::Zero(m, k + 1);
  for (Eigen::Index i = 0; i < k; ++i) core(i, i) = model.singular_values()(i);
  core.block(0, k, k, 1) = coeffs;
  if (new_direction) core(k, k) = orth_norm;

  Eigen::JacobiSVD<Matrix> svd(core, Eigen::ComputeFullU);
  Vector sv = svd.singularValues();

  Matrix extended(model.dim(), m);
  extended.leftCols(k) = basis;
  if (new_direction) extended.col(k) = orth / orth_norm;

  const Eigen::Index keep = kept_rank(sv, model.cap(), count + 1, floor);
  Matrix rotated = extended * svd.matrixU().leftCols(keep);
  if (orthonormality_error(rotated) > SubspaceModel::kOrthoTolerance) reorthonormalize(rotated);
  return make_model(std::move(rotated), std::move(sv), keep, std::move(mean), count + 1, model.cap());
}

Vector reconstruct(const SubspaceModel& model, const ConstVectorRef& x) {
  require_dim(model, x.size());
  return reconstruct_owned(model, Vector(x));
}

Vector residual(const SubspaceModel& model, const ConstVectorRef& x) {
  require_dim(model, x.size());
  const Vector owned = x;
  return owned - reconstruct_owned(model, owned);
}

double score(const SubspaceModel& model, const ConstVectorRef& x) {
  require_dim(model, x.size());
  return score_owned(model, Vector(x));
}

Vector score_all(const SubspaceModel& model, const FeatureMatrix& X) { return score_all(model, X.data()); }

Vector score_all(const SubspaceModel& model, const Eigen::Ref<const RowMatrix>& X) {
  std::vector<std::size_t> rows(static_cast<std::size_t>(X.rows()));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  Vector out(X.rows());
  score_rows(model, X, rows, std::span<double>(out.data(), rows.size()));
  return out;
}

void score_rows(const SubspaceModel& model, const Eigen::Ref<const RowMatrix>& X,
                std::span<const std::size_t> rows, std::span<double> out) {
  require_dim(model, X.cols());
  if (out.size() != rows.size()) throw DimensionError("score_rows output size mismatch");
  for (auto r : rows) {
    if (r >= static_cast<std::size_t>(X.rows())) throw DimensionError("score_rows row index out of range");
  }
  parallel_for(rows.size(), [&](std::size_t begin, std::size_t end) {
    Vector x(X.cols());
    for (std::size_t j = begin; j < end; ++j) {
      x = X.row(static_cast<Eigen::Index>(rows[j])).transpose();
      out[j] = score_owned(model, x);
    }
  });
}

}  // namespace demud
