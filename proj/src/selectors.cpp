#include "demud/selectors.hpp"

#include <algorithm>
#include <numeric>

#include "demud/error.hpp"
#include "demud/rng.hpp"

namespace demud {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::demud: return "demud";
    case Method::svd: return "svd";
    case Method::random: return "random";
  }
  return "demud";
}

Method parse_method(std::string_view text) {
  for (auto m : {Method::demud, Method::svd, Method::random}) {
    if (to_string(m) == text) return m;
  }
  throw UsageError("unknown method '" + std::string(text) + "' (expected demud, svd or random)");
}

std::size_t auto_cap(const FeatureMatrix& X) { return std::min(X.rows(), X.cols()); }

namespace {

void check_selection_count(const FeatureMatrix& X, std::size_t n_select) {
  if (n_select < 1 || n_select > X.rows()) {
    throw UsageError("n_select must be in [1, " + std::to_string(X.rows()) + "], got " +
                     std::to_string(n_select));
  }
}

// First maximum wins, so candidates listed in ascending row order break ties
// toward the lowest index.
std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace

RankingResult demud_rank(const FeatureMatrix& X, std::size_t cap, std::size_t n_select,
                         const ExplanationSink& sink) {
  check_selection_count(X, n_select);
  RankingResult result{Method::demud, {cap, 0, n_select}, {}};
  result.records.reserve(n_select);

  std::vector<std::size_t> remaining(X.rows());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::vector<double> scores(X.rows());

  SubspaceModel model = fit_batch(X, cap);
  for (std::size_t round = 1; round <= n_select; ++round) {
    std::span<double> current(scores.data(), remaining.size());
    score_rows(model, X.data(), remaining, current);
    const std::size_t pos = argmax(current);
    const std::size_t index = remaining[pos];
    const Vector item = X.item(index);

    result.records.push_back({round, X.ids()[index], index, current[pos]});
    if (sink) sink(make_explanation(model, item, X.ids()[index], round));

    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pos));
    if (round == n_select) break;
    model = round == 1 ? init_singleton(item, cap) : update(model, item);
  }
  return result;
}

DemudOutput demud_rank(const FeatureMatrix& X, std::size_t cap, std::size_t n_select) {
  DemudOutput out;
  out.ranking = demud_rank(X, cap, n_select, [&](Explanation&& e) { out.explanations.push_back(std::move(e)); });
  return out;
}

RankingResult svd_rank(const FeatureMatrix& X, std::size_t cap, std::size_t n_select) {
  check_selection_count(X, n_select);
  const SubspaceModel model = fit_batch(X, cap);
  const Vector scores = score_all(model, X);

  std::vector<std::size_t> order(X.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
  });

  RankingResult result{Method::svd, {cap, 0, n_select}, {}};
  result.records.reserve(n_select);
  for (std::size_t i = 0; i < n_select; ++i) {
    const auto index = order[i];
    result.records.push_back({i + 1, X.ids()[index], index, scores(static_cast<Eigen::Index>(index))});
  }
  return result;
}

std::vector<Explanation> svd_explanations(const FeatureMatrix& X, const RankingResult& ranking) {
  const SubspaceModel model = fit_batch(X, ranking.config.cap);
  std::vector<Explanation> out;
  out.reserve(ranking.records.size());
  for (const auto& rec : ranking.records) {
    out.push_back(make_explanation(model, X.item(rec.item_index), rec.item_id, rec.round));
  }
  return out;
}

RankingResult random_rank(const FeatureMatrix& X, std::uint64_t seed, std::size_t n_select) {
  check_selection_count(X, n_select);
  Rng rng(seed);
  const auto perm = rng.permutation(X.rows());
  RankingResult result{Method::random, {0, seed, n_select}, {}};
  result.records.reserve(n_select);
  for (std::size_t i = 0; i < n_select; ++i) {
    result.records.push_back({i + 1, X.ids()[perm[i]], perm[i], std::nullopt});
  }
  return result;
}

SubspaceModel demud_model_at_round(const FeatureMatrix& X, std::size_t cap,
                                   std::span<const std::size_t> selected_indices, std::size_t round) {
  if (round < 1 || round > selected_indices.size()) {
    throw UsageError("round " + std::to_string(round) + " outside 1.." + std::to_string(selected_indices.size()));
  }
  for (auto idx : selected_indices.first(round)) {
    if (idx >= X.rows()) throw DataError("selection index " + std::to_string(idx) + " outside the feature matrix");
  }
  if (round == 1) return fit_batch(X, cap);
  SubspaceModel model = init_singleton(X.item(selected_indices[0]), cap);
  for (std::size_t r = 1; r + 1 < round; ++r) model = update(model, X.item(selected_indices[r]));
  return model;
}

}  // namespace demud
