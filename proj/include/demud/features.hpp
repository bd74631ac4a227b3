#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "demud/feature_matrix.hpp"
#include "demud/image.hpp"
#include "demud/npy.hpp"

namespace demud {

/// `features.npy` -> `features.ids.txt`.
std::filesystem::path ids_sidecar_path(const std::filesystem::path& npy_path);
/// `features.npy` -> `features.meta.json` (records the feature kind).
std::filesystem::path meta_sidecar_path(const std::filesystem::path& npy_path);

/// Loads a feature matrix from NPY plus an ids file (one id per line).
/// `ids_path` defaults to the sidecar next to the NPY; when that file does
/// not exist the ids are the decimal row indices. The feature kind comes from
/// `kind`, else the meta sidecar, else generic.
FeatureMatrix load_npy(const std::filesystem::path& path,
                       const std::optional<std::filesystem::path>& ids_path = std::nullopt,
                       std::optional<FeatureKind> kind = std::nullopt);

/// Writes the NPY payload, the ids sidecar and the meta sidecar.
void save_npy(const FeatureMatrix& X, const std::filesystem::path& path,
              NpyDtype dtype = NpyDtype::float64);

/// CSV with a header row whose first column is `id`; remaining cells numeric.
FeatureMatrix load_csv(const std::filesystem::path& path);

/// Largest centered square; an odd excess leaves the extra line at the end.
Image center_crop(const Image& image);

/// Bilinear resampling with pixel-center alignment and edge clamping.
/// Same-size input is returned unchanged.
Image resize_bilinear(const Image& image, std::size_t width, std::size_t height);

/// Center crop, resize to side x side, flatten row-major channel-last.
Vector pixel_features(const Image& image, std::size_t side = 227);

struct BowCodebook {
  RowMatrix centroids;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  /// k-means objective after each assignment step.
  std::vector<double> objective_history;

  std::size_t size() const { return static_cast<std::size_t>(centroids.rows()); }
  std::size_t descriptor_dim() const { return static_cast<std::size_t>(centroids.cols()); }
};

struct KMeansOptions {
  std::size_t max_iterations = 300;
  double tolerance = 1e-6;
};

/// k-means over all descriptors pooled together: seeded k-means++
/// initialization, then Lloyd iterations until the largest centroid move is
/// below tolerance. Empty clusters are re-seeded at the point farthest from
/// its assigned centroid.
BowCodebook build_codebook(const std::vector<RowMatrix>& descriptor_sets, std::size_t clusters,
                           std::uint64_t seed, const KMeansOptions& options = {});

/// Raw nearest-centroid counts (ties go to the lower centroid index).
Vector bow_histogram(const BowCodebook& codebook, const Eigen::Ref<const RowMatrix>& descriptors);

}  // namespace demud
