#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "demud/explain.hpp"
#include "demud/feature_matrix.hpp"
#include "demud/subspace.hpp"

namespace demud {

enum class Method { demud, svd, random };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct SelectionRecord {
  std::size_t round = 0;  // 1-based
  std::string item_id;
  std::size_t item_index = 0;
  /// Reconstruction error at selection time; empty for random selections.
  std::optional<double> score;
};

struct RankingConfig {
  std::size_t cap = 0;
  std::uint64_t seed = 0;
  std::size_t n_select = 0;
};

struct RankingResult {
  Method method = Method::demud;
  RankingConfig config;
  std::vector<SelectionRecord> records;
};

struct DemudOutput {
  RankingResult ranking;
  std::vector<Explanation> explanations;
};

using ExplanationSink = std::function<void(Explanation&&)>;

/// Greedy novelty ranking. Round 1 picks the item with the largest error
/// under the full-data model; the working model then restarts from that item
/// alone. Every later round explains and records the highest-error remaining
/// item against the current model, then incorporates it. Ties go to the lowest
/// row index.
RankingResult demud_rank(const FeatureMatrix& X, std::size_t cap, std::size_t n_select,
                         const ExplanationSink& sink);
DemudOutput demud_rank(const FeatureMatrix& X, std::size_t cap, std::size_t n_select);

/// Static baseline: one full-data model, items ordered by descending error
/// (stable, so ties keep input order).
RankingResult svd_rank(const FeatureMatrix& X, std::size_t cap, std::size_t n_select);

/// Explanations of svd_rank selections against the full-data model.
std::vector<Explanation> svd_explanations(const FeatureMatrix& X, const RankingResult& ranking);

/// Prefix of a seeded uniform permutation; no scores.
RankingResult random_rank(const FeatureMatrix& X, std::uint64_t seed, std::size_t n_select);

/// Rebuilds the DEMUD model in effect at `round` from the recorded selection
/// order: the full-data model for round 1, otherwise the first selection
/// updated with selections 2..round-1.
SubspaceModel demud_model_at_round(const FeatureMatrix& X, std::size_t cap,
                                   std::span<const std::size_t> selected_indices, std::size_t round);

/// "auto" component count: min(n, d).
std::size_t auto_cap(const FeatureMatrix& X);

}  // namespace demud
