#include "demud/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "demud/error.hpp"
#include "demud/io.hpp"
#include "demud/rng.hpp"

namespace demud {

namespace fs = std::filesystem;

std::filesystem::path ids_sidecar_path(const fs::path& npy_path) {
  auto p = npy_path;
  return p.replace_extension(".ids.txt");
}

std::filesystem::path meta_sidecar_path(const fs::path& npy_path) {
  auto p = npy_path;
  return p.replace_extension(".meta.json");
}

FeatureMatrix load_npy(const fs::path& path, const std::optional<fs::path>& ids_path,
                       std::optional<FeatureKind> kind) {
  NpyArray array = read_npy(path);
  const auto n = static_cast<std::size_t>(array.values.rows());

  std::vector<std::string> ids;
  const fs::path sidecar = ids_path.value_or(ids_sidecar_path(path));
  if (ids_path || fs::exists(sidecar)) {
    ids = split_lines(read_file(sidecar));
    if (ids.size() != n) {
      throw DataError(sidecar.string() + ": " + std::to_string(ids.size()) + " ids for " +
                      std::to_string(n) + " rows");
    }
  } else {
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  }

  if (!kind) {
    const fs::path meta = meta_sidecar_path(path);
    kind = FeatureKind::generic;
    if (fs::exists(meta)) {
      try {
        const auto doc = nlohmann::json::parse(read_file(meta));
        kind = parse_feature_kind(doc.at("feature_kind").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw DataError(meta.string() + ": " + e.what());
      }
    }
  }
  return FeatureMatrix(std::move(ids), std::move(array.values), *kind);
}

void save_npy(const FeatureMatrix& X, const fs::path& path, NpyDtype dtype) {
  write_npy(path, X.data(), dtype);
  std::string ids;
  for (const auto& id : X.ids()) {
    ids += id;
    ids += '\n';
  }
  write_file_atomic(ids_sidecar_path(path), ids);
  nlohmann::json meta = {{"feature_kind", std::string(to_string(X.kind()))},
                         {"rows", X.rows()},
                         {"cols", X.cols()}};
  write_file_atomic(meta_sidecar_path(path), meta.dump(2) + "\n");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto end = line.find(',', start);
    cells.push_back(trim(line.substr(start, end == std::string_view::npos ? end : end - start)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return cells;
}

}  // namespace

FeatureMatrix load_csv(const fs::path& path) {
  std::string text = read_file(path);
  if (text.starts_with("\xEF\xBB\xBF")) text.erase(0, 3);
  auto lines = split_lines(text);
  std::erase_if(lines, [](const std::string& l) { return trim(l).empty(); });
  if (lines.empty()) throw DataError(path.string() + ": empty CSV");

  const auto header = split_commas(lines[0]);
  if (header.empty() || header[0] != "id") {
    throw DataError(path.string() + ": first header column must be 'id'");
  }
  const std::size_t d = header.size() - 1;
  const std::size_t n = lines.size() - 1;
  if (n == 0) throw DataError(path.string() + ": no data rows");
  if (d == 0) throw DataError(path.string() + ": no feature columns");

  std::vector<std::string> ids;
  ids.reserve(n);
  RowMatrix data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < n; ++r) {
    const auto cells = split_commas(lines[r + 1]);
    const std::string where = path.string() + ":" + std::to_string(r + 2);
    if (cells.size() != d + 1) {
      throw DataError(where + ": expected " + std::to_string(d + 1) + " cells, got " +
                      std::to_string(cells.size()));
    }
    ids.emplace_back(cells[0]);
    for (std::size_t c = 0; c < d; ++c) {
      const auto cell = cells[c + 1];
      double value = 0.0;
      const auto* first = cell.data();
      const auto* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (cell.empty() || ec != std::errc{} || ptr != last) {
        throw DataError(where + ": non-numeric cell '" + std::string(cell) + "'");
      }
      data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = value;
    }
  }
  return FeatureMatrix(std::move(ids), std::move(data), FeatureKind::generic);
}

Image center_crop(const Image& image) {
  if (!image.valid()) throw DataError("cannot crop an empty image");
  const std::size_t side = std::min(image.width, image.height);
  const std::size_t left = (image.width - side) / 2;
  const std::size_t top = (image.height - side) / 2;
  Image out(side, side);
  for (std::size_t r = 0; r < side; ++r) {
    const auto* src = image.data.data() + ((r + top) * image.width + left) * Image::kChannels;
    std::copy_n(src, side * Image::kChannels, out.data.data() + r * side * Image::kChannels);
  }
  return out;
}

namespace {

// Bilinear samples as doubles, row-major channel-last.
std::vector<double> resample(const Image& image, std::size_t width, std::size_t height) {
  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t i = 0; i < out; ++i) {
      double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::size_t>(std::floor(src));
      const std::size_t hi = std::min(lo + 1, in - 1);
      t[i] = {lo, hi, src - static_cast<double>(lo)};
    }
    return t;
  };
  const auto xs = taps(image.width, width);
  const auto ys = taps(image.height, height);

  std::vector<double> out(width * height * Image::kChannels);
  for (std::size_t r = 0; r < height; ++r) {
    const auto& ty = ys[r];
    for (std::size_t c = 0; c < width; ++c) {
      const auto& tx = xs[c];
      for (std::size_t ch = 0; ch < Image::kChannels; ++ch) {
        const double top = (1.0 - tx.frac) * image.at(ty.lo, tx.lo, ch) + tx.frac * image.at(ty.lo, tx.hi, ch);
        const double bottom =
            (1.0 - tx.frac) * image.at(ty.hi, tx.lo, ch) + tx.frac * image.at(ty.hi, tx.hi, ch);
        out[(r * width + c) * Image::kChannels + ch] = (1.0 - ty.frac) * top + ty.frac * bottom;
      }
    }
  }
  return out;
}

}  // namespace

Image resize_bilinear(const Image& image, std::size_t width, std::size_t height) {
  if (!image.valid()) throw DataError("cannot resize an empty image");
  if (width == 0 || height == 0) throw UsageError("resize target must be non-empty");
  if (width == image.width && height == image.height) return image;
  const auto samples = resample(image, width, height);
  Image out(width, height);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(samples[i]), 0L, 255L));
  }
  return out;
}

Vector pixel_features(const Image& image, std::size_t side) {
  if (!image.valid()) throw DataError("cannot featurize an empty image");
  if (side == 0) throw UsageError("side must be positive");
  const Image square = center_crop(image);
  const auto samples = resample(square, side, side);
  return Eigen::Map<const Vector>(samples.data(), static_cast<Eigen::Index>(samples.size()));
}

namespace {

double squared_distance(const double* a, const double* b, std::size_t d) {
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return sum;
}

// Nearest centroid with ties broken toward the lower index.
std::pair<std::size_t, double> nearest(const RowMatrix& centroids, const double* point) {
  const auto d = static_cast<std::size_t>(centroids.cols());
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double dist = squared_distance(centroids.row(c).data(), point, d);
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<std::size_t>(c);
    }
  }
  return {best, best_dist};
}

RowMatrix seed_plus_plus(const RowMatrix& points, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(points.rows());
  const auto d = static_cast<std::size_t>(points.cols());
  RowMatrix centroids(static_cast<Eigen::Index>(k), points.cols());
  centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.uniform_index(n)));

  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = squared_distance(points.row(static_cast<Eigen::Index>(i)).data(), centroids.row(0).data(), d);
  }
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : dist) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double running = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        running += dist[i];
        if (running > target && dist[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.uniform_index(n));
    }
    centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], squared_distance(points.row(static_cast<Eigen::Index>(i)).data(),
                                                   centroids.row(static_cast<Eigen::Index>(c)).data(), d));
    }
  }
  return centroids;
}

}  // namespace

BowCodebook build_codebook(const std::vector<RowMatrix>& descriptor_sets, std::size_t clusters,
                           std::uint64_t seed, const KMeansOptions& options) {
  if (clusters == 0) throw UsageError("codebook needs at least one cluster");
  Eigen::Index dim = -1;
  Eigen::Index total = 0;
  for (const auto& set : descriptor_sets) {
    if (set.rows() == 0) continue;
    if (dim >= 0 && set.cols() != dim) throw DimensionError("descriptor sets have different dimensions");
    dim = set.cols();
    total += set.rows();
  }
  if (total < static_cast<Eigen::Index>(clusters) || dim <= 0) {
    throw DataError("need at least " + std::to_string(clusters) + " descriptors, have " + std::to_string(total));
  }

  RowMatrix points(total, dim);
  Eigen::Index offset = 0;
  for (const auto& set : descriptor_sets) {
    if (set.rows() == 0) continue;
    points.middleRows(offset, set.rows()) = set;
    offset += set.rows();
  }
  require_finite(points, "descriptors");

  const auto n = static_cast<std::size_t>(total);
  const auto d = static_cast<std::size_t>(dim);
  Rng rng(seed);
  BowCodebook cb;
  cb.seed = seed;
  cb.centroids = seed_plus_plus(points, clusters, rng);

  std::vector<std::size_t> assignment(n);
  std::vector<double> dist(n);
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::tie(assignment[i], dist[i]) = nearest(cb.centroids, points.row(static_cast<Eigen::Index>(i)).data());
      objective += dist[i];
    }
    cb.objective_history.push_back(objective);

    RowMatrix sums = RowMatrix::Zero(cb.centroids.rows(), dim);
    std::vector<std::size_t> members(clusters, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(assignment[i])) += points.row(static_cast<Eigen::Index>(i));
      ++members[assignment[i]];
    }
    RowMatrix next = cb.centroids;
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < clusters; ++c) {
      const auto row = static_cast<Eigen::Index>(c);
      if (members[c] > 0) {
        next.row(row) = sums.row(row) / static_cast<double>(members[c]);
        continue;
      }
      std::size_t far = 0;
      double far_dist = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && dist[i] > far_dist) {
          far_dist = dist[i];
          far = i;
        }
      }
      taken[far] = true;
      next.row(row) = points.row(static_cast<Eigen::Index>(far));
    }

    double movement = 0.0;
    for (Eigen::Index c = 0; c < next.rows(); ++c) {
      movement = std::max(movement, std::sqrt(squared_distance(next.row(c).data(), cb.centroids.row(c).data(), d)));
    }
    cb.centroids = std::move(next);
    cb.iterations = iter + 1;
    if (movement < options.tolerance) break;
  }
  return cb;
}

Vector bow_histogram(const BowCodebook& codebook, const Eigen::Ref<const RowMatrix>& descriptors) {
  Vector counts = Vector::Zero(codebook.centroids.rows());
  if (descriptors.rows() == 0) return counts;
  if (descriptors.cols() != codebook.centroids.cols()) {
    throw DimensionError("descriptor dimension " + std::to_string(descriptors.cols()) +
                         " does not match codebook dimension " + std::to_string(codebook.centroids.cols()));
  }
  const RowMatrix owned = descriptors;
  for (Eigen::Index i = 0; i < owned.rows(); ++i) {
    counts(static_cast<Eigen::Index>(nearest(codebook.centroids, owned.row(i).data()).first)) += 1.0;
  }
  return counts;
}

}  // namespace demud
