#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "demud/selectors.hpp"

namespace demud {

/// Ground-truth class per item id; used only after the fact for evaluation.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::pair<std::string, std::string>> entries);

  const std::string& label(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.contains(id); }

  std::size_t size() const { return entries_.size(); }
  /// Number of distinct labels over all items.
  std::size_t class_count() const { return class_count_; }
  /// Labels in file order (one per item).
  std::vector<std::string> labels() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t class_count_ = 0;
};

/// CSV `id,label` with a header row.
LabelMap load_labels(const std::filesystem::path& path);

struct DiscoveryCurve {
  std::vector<std::size_t> counts;  // C_1..C_t
  std::size_t classes = 0;          // c
  std::size_t t() const { return counts.size(); }
};

/// C_i = distinct labels among the first i selections.
DiscoveryCurve discovery_curve(const RankingResult& ranking, const LabelMap& labels, std::size_t t);
/// Same, over an explicit label sequence in selection order.
DiscoveryCurve discovery_curve(const std::vector<std::string>& selected_labels, std::size_t classes, std::size_t t);

/// Area under the curve normalized by perfect discovery, in percent.
/// The perfect area is sum_{i<=min(t,c)} i + c * max(0, t - c).
double nauc(const DiscoveryCurve& curve);

struct BaselineStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over trials
  std::size_t trials = 0;
};

/// Mean and spread of nAUC_t over seeded uniform random orderings of the
/// labelled items. Trial j uses the seed mix_seed(seed, j).
BaselineStats random_baseline(const std::vector<std::string>& labels, std::size_t t, std::size_t trials,
                              std::uint64_t seed);

struct ChosenT {
  std::size_t t = 0;
  double expected_cover = 0.0;  // Monte-Carlo mean selections to see every class
};

/// min(ceil(expected random cover time), cap_t, n_items).
ChosenT choose_t(const std::vector<std::string>& labels, std::size_t cap_t, std::uint64_t seed,
                 std::size_t trials = 1000);

}  // namespace demud
