#pragma once

// Independent oracles and fixtures shared by the test suites. Nothing here
// calls into the subspace update or selection code under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "demud/feature_matrix.hpp"
#include "demud/rng.hpp"

namespace demud::testing {

inline std::filesystem::path data_dir() { return DEMUD_TEST_DATA_DIR; }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("demud_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline RowMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = scale * rng.normal();
  return m;
}

inline Vector random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  return random_matrix(1, n, seed, scale).row(0).transpose();
}

inline std::vector<std::string> index_ids(std::size_t n, const std::string& prefix = "item") {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

inline FeatureMatrix as_features(const RowMatrix& m, FeatureKind kind = FeatureKind::generic) {
  return FeatureMatrix(index_ids(static_cast<std::size_t>(m.rows())), m, kind);
}

/// Dense SVD oracle of the centered data: JacobiSVD (two-sided Jacobi),
/// independent of the BDCSVD / Gram paths used by fit_batch.
struct DenseSvd {
  Vector mean;
  Matrix basis;  // right singular vectors, columns
  Vector singular_values;
};

inline DenseSvd dense_centered_svd(const RowMatrix& X, double rel_tol = 1e-10) {
  DenseSvd out;
  out.mean = X.colwise().mean().transpose();
  const Matrix centered = X.rowwise() - out.mean.transpose();
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  Eigen::Index k = 0;
  const double floor = 1e-12 * std::max(1.0, X.cwiseAbs().maxCoeff()) * std::sqrt(double(X.rows()));
  while (k < s.size() && s(k) > rel_tol * s(0) && s(k) > floor) ++k;
  out.basis = svd.matrixV().leftCols(k);
  out.singular_values = s.head(k);
  return out;
}

/// Sines of the principal angles between two orthonormal bases of equal
/// width, from the singular values of (I - B B^T) A. Computing sines rather
/// than arccos of the cosines keeps small angles accurate.
inline Vector principal_angle_sines(const Matrix& a, const Matrix& b) {
  if (a.cols() == 0) return Vector(0);
  const Matrix outside = a - b * (b.transpose() * a);
  Eigen::JacobiSVD<Matrix> svd(outside);
  return svd.singularValues();
}

inline double max_principal_angle(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
  if (a.cols() == 0) return 0.0;
  const Vector s = principal_angle_sines(a, b);
  return std::asin(std::min(1.0, s.maxCoeff()));
}

/// U U^T (x - mu) + mu by explicit loops.
inline Vector loop_reconstruct(const Matrix& basis, const Vector& mean, const Vector& x) {
  const Eigen::Index d = mean.size();
  Vector out = mean;
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    double c = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) c += basis(i, j) * (x(i) - mean(i));
    for (Eigen::Index i = 0; i < d; ++i) out(i) += basis(i, j) * c;
  }
  return out;
}

struct ClusterFixture {
  FeatureMatrix features;
  std::vector<std::string> labels;  // per row
  std::vector<std::size_t> cluster_of;
  Matrix centers;                   // d x clusters
  double min_center_distance = 0.0;
};

/// Seeded Gaussian clusters with unit noise; centers drawn with scale
/// `center_scale` and required to be at least `min_separation` apart.
inline ClusterFixture gaussian_clusters(std::size_t clusters, std::size_t per_cluster, std::size_t dim,
                                        std::uint64_t seed, double center_scale = 10.0,
                                        double min_separation = 10.0) {
  Rng rng(seed);
  Matrix centers(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(clusters));
  double min_dist = 0.0;
  do {
    for (Eigen::Index j = 0; j < centers.cols(); ++j)
      for (Eigen::Index i = 0; i < centers.rows(); ++i) centers(i, j) = center_scale * rng.normal();
    min_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < centers.cols(); ++a)
      for (Eigen::Index b = a + 1; b < centers.cols(); ++b)
        min_dist = std::min(min_dist, (centers.col(a) - centers.col(b)).norm());
  } while (clusters > 1 && min_dist < min_separation);

  RowMatrix data(static_cast<Eigen::Index>(clusters * per_cluster), static_cast<Eigen::Index>(dim));
  std::vector<std::string> ids, labels;
  std::vector<std::size_t> cluster_of;
  for (std::size_t c = 0; c < clusters; ++c) {
    for (std::size_t p = 0; p < per_cluster; ++p) {
      const auto row = static_cast<Eigen::Index>(c * per_cluster + p);
      for (Eigen::Index i = 0; i < data.cols(); ++i) data(row, i) = centers(i, static_cast<Eigen::Index>(c)) + rng.normal();
      ids.push_back("c" + std::to_string(c) + "_" + std::to_string(p));
      labels.push_back("class" + std::to_string(c));
      cluster_of.push_back(c);
    }
  }
  return {FeatureMatrix(std::move(ids), std::move(data)), std::move(labels), std::move(cluster_of), centers, min_dist};
}

}  // namespace demud::testing
