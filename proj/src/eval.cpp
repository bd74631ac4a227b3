#include "demud/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "demud/error.hpp"
#include "demud/io.hpp"
#include "demud/parallel.hpp"
#include "demud/rng.hpp"

namespace demud {

LabelMap::LabelMap(std::vector<std::pair<std::string, std::string>> entries) : entries_(std::move(entries)) {
  std::unordered_set<std::string> classes;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i].first, i).second) {
      throw DataError("duplicate label entry for id '" + entries_[i].first + "'");
    }
    classes.insert(entries_[i].second);
  }
  class_count_ = classes.size();
}

const std::string& LabelMap::label(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw DataError("no label for id '" + id + "'");
  return entries_[it->second].second;
}

std::vector<std::string> LabelMap::labels() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.second);
  return out;
}

LabelMap load_labels(const std::filesystem::path& path) {
  const auto lines = split_lines(read_file(path));
  std::vector<std::pair<std::string, std::string>> entries;
  bool header = true;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(i + 1) + ": expected 'id,label'");
    }
    entries.emplace_back(line.substr(0, comma), line.substr(comma + 1));
  }
  if (entries.empty()) throw DataError(path.string() + ": no labels");
  return LabelMap(std::move(entries));
}

DiscoveryCurve discovery_curve(const std::vector<std::string>& selected_labels, std::size_t classes,
                               std::size_t t) {
  if (t < 1 || t > selected_labels.size()) {
    throw UsageError("t must be in [1, " + std::to_string(selected_labels.size()) + "], got " + std::to_string(t));
  }
  DiscoveryCurve curve;
  curve.classes = classes;
  curve.counts.reserve(t);
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < t; ++i) {
    seen.insert(selected_labels[i]);
    curve.counts.push_back(seen.size());
  }
  if (curve.counts.back() > classes) throw DataError("curve discovered more classes than exist");
  return curve;
}

DiscoveryCurve discovery_curve(const RankingResult& ranking, const LabelMap& labels, std::size_t t) {
  if (t < 1 || t > ranking.records.size()) {
    throw UsageError("t must be in [1, " + std::to_string(ranking.records.size()) + "], got " + std::to_string(t));
  }
  std::vector<std::string> selected;
  selected.reserve(t);
  for (std::size_t i = 0; i < t; ++i) selected.push_back(labels.label(ranking.records[i].item_id));
  return discovery_curve(selected, labels.class_count(), t);
}

double nauc(const DiscoveryCurve& curve) {
  const std::size_t t = curve.t();
  const std::size_t c = curve.classes;
  if (t == 0 || c == 0) throw DataError("nAUC needs a non-empty curve and at least one class");
  std::size_t area = 0;
  for (auto v : curve.counts) area += v;
  const std::size_t m = std::min(t, c);
  const std::size_t perfect = m * (m + 1) / 2 + c * (t > c ? t - c : 0);
  return static_cast<double>(area) / static_cast<double>(perfect) * 100.0;
}

BaselineStats random_baseline(const std::vector<std::string>& labels, std::size_t t, std::size_t trials,
                              std::uint64_t seed) {
  if (t < 1 || t > labels.size()) {
    throw UsageError("t must be in [1, " + std::to_string(labels.size()) + "], got " + std::to_string(t));
  }
  if (trials == 0) throw UsageError("trials must be positive");
  const std::size_t classes = std::unordered_set<std::string>(labels.begin(), labels.end()).size();

  std::vector<double> values(trials);
  parallel_for(trials, [&](std::size_t begin, std::size_t end) {
    std::vector<std::string> order(t);
    for (std::size_t j = begin; j < end; ++j) {
      Rng rng(mix_seed(seed, j));
      const auto perm = rng.permutation(labels.size());
      for (std::size_t i = 0; i < t; ++i) order[i] = labels[perm[i]];
      values[j] = nauc(discovery_curve(order, classes, t));
    }
  }, 8);

  BaselineStats stats;
  stats.trials = trials;
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(trials);
  if (trials > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - stats.mean) * (v - stats.mean);
    stats.stddev = std::sqrt(sq / static_cast<double>(trials - 1));
  }
  return stats;
}

ChosenT choose_t(const std::vector<std::string>& labels, std::size_t cap_t, std::uint64_t seed,
                 std::size_t trials) {
  if (labels.empty()) throw DataError("choose_t needs at least one label");
  if (trials == 0) throw UsageError("trials must be positive");
  std::unordered_map<std::string, std::size_t> class_ids;
  std::vector<std::size_t> coded;
  coded.reserve(labels.size());
  for (const auto& l : labels) coded.push_back(class_ids.emplace(l, class_ids.size()).first->second);
  const std::size_t classes = class_ids.size();

  std::vector<std::size_t> cover(trials);
  parallel_for(trials, [&](std::size_t begin, std::size_t end) {
    std::vector<bool> seen(classes);
    for (std::size_t j = begin; j < end; ++j) {
      Rng rng(mix_seed(seed, j));
      const auto perm = rng.permutation(coded.size());
      std::fill(seen.begin(), seen.end(), false);
      std::size_t found = 0;
      std::size_t steps = 0;
      while (found < classes) {
        const auto cls = coded[perm[steps++]];
        if (!seen[cls]) {
          seen[cls] = true;
          ++found;
        }
      }
      cover[j] = steps;
    }
  }, 8);

  std::size_t total = 0;
  for (auto v : cover) total += v;
  ChosenT out;
  out.expected_cover = static_cast<double>(total) / static_cast<double>(trials);
  const auto rounded = static_cast<std::size_t>(std::ceil(out.expected_cover));
  out.t = std::max<std::size_t>(1, std::min({rounded, cap_t, labels.size()}));
  return out;
}

}  // namespace demud
