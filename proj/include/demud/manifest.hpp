#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "demud/feature_matrix.hpp"
#include "demud/selectors.hpp"

namespace demud {

inline constexpr const char* kToolVersion = "0.1.0";

/// First line of manifest.jsonl.
struct ManifestHeader {
  std::string tool_version = kToolVersion;
  Method method = Method::demud;
  std::size_t k = 0;
  std::string k_requested = "auto";
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::optional<std::size_t> t;
  std::string feature_file;
  std::string feature_digest;  // "sha256:<hex>"
  FeatureKind feature_kind = FeatureKind::generic;
  std::size_t n_items = 0;
  std::size_t dim = 0;
  std::string rng = "";
};

/// A ranking run: header record followed by one record per selection.
struct Manifest {
  ManifestHeader header;
  std::vector<SelectionRecord> records;

  /// Row indices in selection order.
  std::vector<std::size_t> indices() const;
  RankingResult ranking() const;
};

/// JSON lines with a fixed key order; doubles printed with 17 significant
/// digits so the text round-trips exactly.
std::string encode_manifest(const Manifest& manifest);

/// Throws DataError unless the header comes first and rounds are 1, 2, ...
Manifest parse_manifest(std::string_view text);
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace demud
