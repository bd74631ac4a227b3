#include "demud/manifest.hpp"

#include <nlohmann/json.hpp>

#include "demud/error.hpp"
#include "demud/io.hpp"

namespace demud {

using nlohmann::json;

std::vector<std::size_t> Manifest::indices() const {
  std::vector<std::size_t> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.item_index);
  return out;
}

RankingResult Manifest::ranking() const {
  return {header.method, {header.k, header.seed, header.n}, records};
}

namespace {

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

}  // namespace

std::string encode_manifest(const Manifest& m) {
  const auto& h = m.header;
  std::string out = "{\"type\": \"header\"";
  out += ", \"tool\": \"demud\"";
  out += ", \"tool_version\": " + json_string(h.tool_version);
  out += ", \"method\": " + json_string(to_string(h.method));
  out += ", \"k\": " + std::to_string(h.k);
  out += ", \"k_requested\": " + json_string(h.k_requested);
  out += ", \"seed\": " + std::to_string(h.seed);
  out += ", \"n\": " + std::to_string(h.n);
  out += ", \"t\": " + (h.t ? std::to_string(*h.t) : std::string("null"));
  out += ", \"feature_file\": " + json_string(h.feature_file);
  out += ", \"feature_digest\": " + json_string(h.feature_digest);
  out += ", \"feature_kind\": " + json_string(to_string(h.feature_kind));
  out += ", \"n_items\": " + std::to_string(h.n_items);
  out += ", \"dim\": " + std::to_string(h.dim);
  out += ", \"rng\": " + json_string(h.rng);
  out += "}\n";
  for (const auto& r : m.records) {
    out += "{\"type\": \"selection\", \"round\": " + std::to_string(r.round);
    out += ", \"id\": " + json_string(r.item_id);
    out += ", \"index\": " + std::to_string(r.item_index);
    out += ", \"score\": " + (r.score ? format_double(*r.score) : std::string("null"));
    out += "}\n";
  }
  return out;
}

Manifest parse_manifest(std::string_view text) {
  const auto lines = split_lines(text);
  Manifest m;
  bool have_header = false;
  try {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto doc = json::parse(lines[i]);
      const auto type = doc.at("type").get<std::string>();
      const std::string where = "manifest line " + std::to_string(i + 1);
      if (type == "header") {
        if (have_header) throw DataError(where + ": duplicate header");
        have_header = true;
        auto& h = m.header;
        h.tool_version = doc.at("tool_version").get<std::string>();
        h.method = parse_method(doc.at("method").get<std::string>());
        h.k = doc.at("k").get<std::size_t>();
        h.k_requested = doc.value("k_requested", std::string("auto"));
        h.seed = doc.at("seed").get<std::uint64_t>();
        h.n = doc.at("n").get<std::size_t>();
        if (doc.contains("t") && !doc.at("t").is_null()) h.t = doc.at("t").get<std::size_t>();
        h.feature_file = doc.value("feature_file", std::string());
        h.feature_digest = doc.at("feature_digest").get<std::string>();
        h.feature_kind = parse_feature_kind(doc.at("feature_kind").get<std::string>());
        h.n_items = doc.value("n_items", std::size_t{0});
        h.dim = doc.value("dim", std::size_t{0});
        h.rng = doc.value("rng", std::string());
      } else if (type == "selection") {
        if (!have_header) throw DataError(where + ": selection before header");
        SelectionRecord r;
        r.round = doc.at("round").get<std::size_t>();
        r.item_id = doc.at("id").get<std::string>();
        r.item_index = doc.at("index").get<std::size_t>();
        if (!doc.at("score").is_null()) r.score = doc.at("score").get<double>();
        if (r.round != m.records.size() + 1) {
          throw DataError(where + ": expected round " + std::to_string(m.records.size() + 1));
        }
        m.records.push_back(std::move(r));
      } else {
        throw DataError(where + ": unknown record type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  if (!have_header) throw DataError("manifest has no header record");
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) { return parse_manifest(read_file(path)); }

}  // namespace demud
