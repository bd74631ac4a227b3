#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace demud {

using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using ConstVectorRef = Eigen::Ref<const Eigen::VectorXd>;

enum class FeatureKind { pixel, bow, cnn_fc6, cnn_fc7, cnn_fc8, generic };

std::string_view to_string(FeatureKind kind);
/// Accepts "pixel", "bow", "cnn-fc6", "cnn-fc7", "cnn-fc8", "generic".
FeatureKind parse_feature_kind(std::string_view text);

/// The data set: n items by d features, one row per item, each item with a
/// distinct opaque identifier. Construction validates the invariants
/// (non-empty, finite, ids unique and matching the row count).
class FeatureMatrix {
 public:
  FeatureMatrix(std::vector<std::string> ids, RowMatrix data,
                FeatureKind kind = FeatureKind::generic);

  std::size_t rows() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(data_.cols()); }

  const std::vector<std::string>& ids() const { return ids_; }
  const RowMatrix& data() const { return data_; }
  FeatureKind kind() const { return kind_; }

  /// Row i as a dense column vector (copied).
  Vector item(std::size_t i) const { return data_.row(static_cast<Eigen::Index>(i)).transpose(); }

 private:
  std::vector<std::string> ids_;
  RowMatrix data_;
  FeatureKind kind_;
};

[[noreturn]] void throw_non_finite(std::string_view what);

/// Throws DataError when any entry is NaN or infinite.
template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& values, std::string_view what) {
  if (!values.allFinite()) throw_non_finite(what);
}

}  // namespace demud
