#include "demud/feature_matrix.hpp"

#include <unordered_set>

#include "demud/error.hpp"

namespace demud {

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::pixel: return "pixel";
    case FeatureKind::bow: return "bow";
    case FeatureKind::cnn_fc6: return "cnn-fc6";
    case FeatureKind::cnn_fc7: return "cnn-fc7";
    case FeatureKind::cnn_fc8: return "cnn-fc8";
    case FeatureKind::generic: return "generic";
  }
  return "generic";
}

FeatureKind parse_feature_kind(std::string_view text) {
  for (auto kind : {FeatureKind::pixel, FeatureKind::bow, FeatureKind::cnn_fc6,
                    FeatureKind::cnn_fc7, FeatureKind::cnn_fc8, FeatureKind::generic}) {
    if (to_string(kind) == text) return kind;
  }
  throw UsageError("unknown feature kind '" + std::string(text) + "'");
}

FeatureMatrix::FeatureMatrix(std::vector<std::string> ids, RowMatrix data, FeatureKind kind)
    : ids_(std::move(ids)), data_(std::move(data)), kind_(kind) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw DataError("feature matrix must have at least one row and one column");
  }
  if (ids_.size() != rows()) {
    throw DataError("id count " + std::to_string(ids_.size()) + " does not match row count " +
                    std::to_string(rows()));
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(ids_.size());
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) throw DataError("duplicate item id '" + id + "'");
  }
  require_finite(data_, "feature matrix");
}

void throw_non_finite(std::string_view what) {
  throw DataError(std::string(what) + " contains non-finite values");
}

}  // namespace demud
