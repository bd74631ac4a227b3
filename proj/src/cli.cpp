#include "demud/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "demud/error.hpp"
#include "demud/eval.hpp"
#include "demud/explain.hpp"
#include "demud/features.hpp"
#include "demud/io.hpp"
#include "demud/manifest.hpp"
#include "demud/npy.hpp"
#include "demud/parallel.hpp"
#include "demud/rng.hpp"
#include "demud/selectors.hpp"

namespace demud {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Regular files in `dir` with one of the extensions, sorted by file name.
std::vector<fs::path> list_inputs(const fs::path& dir, std::initializer_list<const char*> extensions) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = lower(entry.path().extension().string());
    if (std::find(extensions.begin(), extensions.end(), ext) != extensions.end()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

void require_unique_ids(const std::vector<fs::path>& files) {
  std::map<std::string, fs::path> seen;
  for (const auto& f : files) {
    const auto [it, fresh] = seen.emplace(f.stem().string(), f);
    if (!fresh) {
      throw DataError("files '" + it->second.filename().string() + "' and '" + f.filename().string() +
                      "' map to the same id");
    }
  }
}

NpyDtype parse_dtype(const std::string& text) {
  if (text == "float32" || text == "f4") return NpyDtype::float32;
  if (text == "float64" || text == "f8") return NpyDtype::float64;
  throw UsageError("unknown dtype '" + text + "' (expected float32 or float64)");
}

std::size_t parse_cap(const std::string& text, const FeatureMatrix& X) {
  if (text == "auto") return auto_cap(X);
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw UsageError("--k must be 'auto' or a non-negative integer, got '" + text + "'");
  }
  return value;
}

std::size_t infer_side(std::size_t dim, std::size_t requested) {
  if (requested != 0) {
    if (requested * requested * Image::kChannels != dim) {
      throw DataError("--side " + std::to_string(requested) + " does not match feature dimension " +
                      std::to_string(dim));
    }
    return requested;
  }
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(dim) / 3.0)));
  if (side * side * Image::kChannels != dim) {
    throw DataError("pixel feature dimension " + std::to_string(dim) + " is not side*side*3");
  }
  return side;
}

std::string digest_of(const fs::path& path) { return "sha256:" + sha256_file(path); }

void check_digest(const Manifest& manifest, const fs::path& features, bool allow_mismatch, std::ostream& err) {
  const auto actual = digest_of(features);
  if (actual == manifest.header.feature_digest) return;
  const std::string message = "feature file digest " + actual + " does not match manifest digest " +
                              manifest.header.feature_digest;
  if (!allow_mismatch) throw DataError(message + " (pass --allow-digest-mismatch to override)");
  err << "warning: " << message << "\n";
}

struct FeaturizeOptions {
  std::string input;
  std::string mode;
  std::string out;
  std::size_t side = 227;
  std::size_t k_sift = 0;
  std::uint64_t seed = 0;
  std::string dtype = "float32";
};

struct Skipped {
  std::string file;
  std::string error;
};

int featurize(const FeaturizeOptions& opt, std::ostream& out, std::ostream& err) {
  const fs::path out_path = opt.out;
  const bool pixel = opt.mode == "pixel";
  if (!pixel && opt.mode != "bow") throw UsageError("--mode must be pixel or bow");
  if (!pixel && opt.k_sift == 0) throw UsageError("bow mode needs --k-sift >= 1");
  if (pixel && opt.side == 0) throw UsageError("--side must be positive");
  const NpyDtype dtype = parse_dtype(opt.dtype);

  const auto files = pixel ? list_inputs(opt.input, {".png", ".jpg", ".jpeg"}) : list_inputs(opt.input, {".npy"});
  if (files.empty()) throw DataError("no " + std::string(pixel ? "images" : "descriptor files") + " in '" + opt.input + "'");
  require_unique_ids(files);

  std::vector<std::optional<std::string>> failures(files.size());
  std::vector<std::string> ids;
  RowMatrix data;
  json report = {{"mode", opt.mode}, {"input", opt.input}};

  if (pixel) {
    const std::size_t dim = opt.side * opt.side * Image::kChannels;
    RowMatrix all(static_cast<Eigen::Index>(files.size()), static_cast<Eigen::Index>(dim));
    parallel_for(files.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        try {
          all.row(static_cast<Eigen::Index>(i)) = pixel_features(read_image(files[i]), opt.side).transpose();
        } catch (const std::exception& e) {
          failures[i] = e.what();
        }
      }
    }, 1);
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < files.size(); ++i) {
      if (!failures[i]) keep.push_back(static_cast<Eigen::Index>(i));
    }
    data.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < keep.size(); ++j) {
      data.row(static_cast<Eigen::Index>(j)) = all.row(keep[j]);
      ids.push_back(files[static_cast<std::size_t>(keep[j])].stem().string());
    }
    report["side"] = opt.side;
  } else {
    std::vector<RowMatrix> sets;
    for (std::size_t i = 0; i < files.size(); ++i) {
      try {
        auto array = read_npy(files[i]);
        require_finite(array.values, files[i].string());
        sets.push_back(std::move(array.values));
        ids.push_back(files[i].stem().string());
      } catch (const DataError& e) {
        failures[i] = e.what();
      }
    }
    if (!sets.empty()) {
      const BowCodebook codebook = build_codebook(sets, opt.k_sift, opt.seed);
      data.resize(static_cast<Eigen::Index>(sets.size()), static_cast<Eigen::Index>(opt.k_sift));
      for (std::size_t i = 0; i < sets.size(); ++i) {
        data.row(static_cast<Eigen::Index>(i)) = bow_histogram(codebook, sets[i]).transpose();
      }
      auto cb_path = out_path;
      cb_path.replace_extension(".codebook.npy");
      write_npy(cb_path, codebook.centroids, NpyDtype::float64);
      report["codebook"] = {{"file", cb_path.filename().string()},
                            {"k_sift", opt.k_sift},
                            {"seed", opt.seed},
                            {"iterations", codebook.iterations},
                            {"objective", codebook.objective_history.back()}};
    }
  }

  json skipped = json::array();
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!failures[i]) continue;
    err << "warning: skipping " << files[i].filename().string() << ": " << *failures[i] << "\n";
    skipped.push_back({{"file", files[i].filename().string()}, {"error", *failures[i]}});
  }
  report["processed"] = ids.size();
  report["skipped"] = skipped;
  auto report_path = out_path;
  report_path.replace_extension(".report.json");
  if (ids.empty()) {
    write_file_atomic(report_path, report.dump(2) + "\n");
    throw DataError("every input failed; see " + report_path.string());
  }

  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  FeatureMatrix X(std::move(ids), std::move(data), pixel ? FeatureKind::pixel : FeatureKind::bow);
  save_npy(X, out_path, dtype);
  write_file_atomic(report_path, report.dump(2) + "\n");
  out << "wrote " << X.rows() << " x " << X.cols() << " features to " << out_path.string() << "\n";
  return kExitOk;
}

struct FeatureSource {
  std::string features;
  std::string ids;
  std::string kind;
};

FeatureMatrix load_features(const FeatureSource& src) {
  std::optional<fs::path> ids;
  if (!src.ids.empty()) ids = src.ids;
  std::optional<FeatureKind> kind;
  if (!src.kind.empty()) kind = parse_feature_kind(src.kind);
  const fs::path path = src.features;
  if (lower(path.extension().string()) == ".csv") {
    FeatureMatrix X = load_csv(path);
    if (!kind) return X;
    return FeatureMatrix(X.ids(), X.data(), *kind);
  }
  return load_npy(path, ids, kind);
}

struct RankOptions {
  FeatureSource source;
  std::string method = "demud";
  std::string k = "auto";
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> t;
  std::string out;
  std::size_t side = 0;
  bool explain_svd = false;
};

void export_one(const Explanation& e, FeatureKind kind, const fs::path& out_dir, std::size_t side) {
  export_explanation(e, kind, out_dir / "explanations");
  if (kind == FeatureKind::pixel) export_explanation_images(e, side, out_dir / "renders");
}

int rank(const RankOptions& opt, std::ostream& out) {
  const Method method = parse_method(opt.method);
  const FeatureMatrix X = load_features(opt.source);
  const std::size_t cap = parse_cap(opt.k, X);
  if (opt.n < 1 || opt.n > X.rows()) {
    throw UsageError("--n must be in [1, " + std::to_string(X.rows()) + "], got " + std::to_string(opt.n));
  }
  const fs::path out_dir = opt.out;
  fs::create_directories(out_dir);
  const std::size_t side = X.kind() == FeatureKind::pixel ? infer_side(X.cols(), opt.side) : 0;

  Manifest manifest;
  auto& h = manifest.header;
  h.method = method;
  h.k = method == Method::random ? 0 : cap;
  h.k_requested = opt.k;
  h.seed = opt.seed;
  h.n = opt.n;
  h.t = opt.t;
  h.feature_file = fs::path(opt.source.features).filename().string();
  h.feature_digest = digest_of(opt.source.features);
  h.feature_kind = X.kind();
  h.n_items = X.rows();
  h.dim = X.cols();
  h.rng = method == Method::random ? Rng::kName : "";

  RankingResult ranking;
  switch (method) {
    case Method::demud:
      ranking = demud_rank(X, cap, opt.n, [&](Explanation&& e) { export_one(e, X.kind(), out_dir, side); });
      break;
    case Method::svd:
      ranking = svd_rank(X, cap, opt.n);
      if (opt.explain_svd) {
        for (const auto& e : svd_explanations(X, ranking)) export_one(e, X.kind(), out_dir, side);
      }
      break;
    case Method::random:
      ranking = random_rank(X, opt.seed, opt.n);
      break;
  }
  manifest.records = std::move(ranking.records);
  write_file_atomic(out_dir / "manifest.jsonl", encode_manifest(manifest));
  out << "ranked " << manifest.records.size() << " of " << X.rows() << " items with " << to_string(method)
      << " -> " << (out_dir / "manifest.jsonl").string() << "\n";
  return kExitOk;
}

struct EvalOptions {
  std::string manifest;
  std::string labels;
  std::optional<std::size_t> t;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  std::string out;
  std::string features;
  bool allow_digest_mismatch = false;
};

int evaluate(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  const Manifest manifest = read_manifest(opt.manifest);
  if (!opt.features.empty()) check_digest(manifest, opt.features, opt.allow_digest_mismatch, err);
  const LabelMap labels = load_labels(opt.labels);
  for (const auto& r : manifest.records) {
    if (!labels.contains(r.item_id)) throw DataError("manifest id '" + r.item_id + "' has no label");
  }
  if (opt.trials == 0) throw UsageError("--trials must be positive");

  const auto all_labels = labels.labels();
  std::size_t t = 0;
  json t_info;
  if (opt.t) {
    t = *opt.t;
    t_info = {{"source", "flag"}};
  } else {
    const ChosenT chosen = choose_t(all_labels, 300, opt.seed, opt.trials);
    t = std::min(chosen.t, manifest.records.size());
    t_info = {{"source", "random-cover"},
              {"expected_random_cover", chosen.expected_cover},
              {"cap", 300},
              {"clamped_to_manifest", t < chosen.t}};
  }
  if (t < 1 || t > manifest.records.size()) {
    throw UsageError("--t must be in [1, " + std::to_string(manifest.records.size()) + "], got " + std::to_string(t));
  }
  if (t > all_labels.size()) throw UsageError("--t exceeds the number of labelled items");

  const DiscoveryCurve curve = discovery_curve(manifest.ranking(), labels, t);
  const double score = nauc(curve);
  const BaselineStats baseline = random_baseline(all_labels, t, opt.trials, opt.seed);

  json report = {{"method", std::string(to_string(manifest.header.method))},
                 {"manifest", fs::path(opt.manifest).filename().string()},
                 {"t", t},
                 {"t_provenance", t_info},
                 {"classes", curve.classes},
                 {"curve", curve.counts},
                 {"nauc", score},
                 {"random_baseline",
                  {{"mean", baseline.mean}, {"std", baseline.stddev}, {"trials", baseline.trials}, {"seed", opt.seed}}}};
  const std::string text = report.dump(2) + "\n";
  if (!opt.out.empty()) {
    const fs::path path = opt.out;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_atomic(path, text);
  }
  out << text;
  return kExitOk;
}

struct ExplainOptions {
  FeatureSource source;
  std::string manifest;
  std::size_t round = 0;
  std::string out;
  std::size_t side = 0;
  bool allow_digest_mismatch = false;
};

int explain(const ExplainOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.round < 1) throw UsageError("--round must be >= 1");
  const Manifest manifest = read_manifest(opt.manifest);
  if (manifest.header.method != Method::demud) {
    throw UsageError("explain needs a demud manifest, got " + std::string(to_string(manifest.header.method)));
  }
  if (opt.round > manifest.records.size()) {
    throw UsageError("round " + std::to_string(opt.round) + " not in manifest (" +
                     std::to_string(manifest.records.size()) + " rounds)");
  }
  check_digest(manifest, opt.source.features, opt.allow_digest_mismatch, err);
  const FeatureMatrix X = load_features(opt.source);
  const auto indices = manifest.indices();
  for (const auto& r : manifest.records) {
    if (r.item_index >= X.rows() || X.ids()[r.item_index] != r.item_id) {
      throw DataError("manifest record " + std::to_string(r.round) + " (" + r.item_id +
                      ") does not match the feature file");
    }
  }

  const SubspaceModel model = demud_model_at_round(X, manifest.header.k, indices, opt.round);
  const auto& rec = manifest.records[opt.round - 1];
  const Explanation e = make_explanation(model, X.item(rec.item_index), rec.item_id, rec.round);
  const fs::path dir = opt.out;
  export_explanation(e, X.kind(), dir);
  if (X.kind() == FeatureKind::pixel) export_explanation_images(e, infer_side(X.cols(), opt.side), dir);
  out << "round " << rec.round << " (" << rec.item_id << "): score " << format_double(e.score) << " -> "
      << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Novelty ranking with reconstruction/residual explanations"};
  app.name("demud");
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  FeaturizeOptions fo;
  auto* featurize_cmd = app.add_subcommand("featurize", "Turn an image or descriptor directory into features");
  featurize_cmd->add_option("--input", fo.input, "Image directory (pixel) or descriptor NPY directory (bow)")->required();
  featurize_cmd->add_option("--mode", fo.mode, "pixel or bow")->required();
  featurize_cmd->add_option("--out", fo.out, "Output feature NPY")->required();
  featurize_cmd->add_option("--side", fo.side, "Crop/resize side in pixels")->capture_default_str();
  featurize_cmd->add_option("--k-sift", fo.k_sift, "Codebook size (bow)");
  featurize_cmd->add_option("--seed", fo.seed, "k-means++ seed (bow)")->capture_default_str();
  featurize_cmd->add_option("--dtype", fo.dtype, "float32 or float64")->capture_default_str();

  auto add_source = [](CLI::App* cmd, FeatureSource& src) {
    cmd->add_option("--features", src.features, "Feature NPY (or CSV)")->required();
    cmd->add_option("--ids", src.ids, "Ids file (default: <features>.ids.txt)");
    cmd->add_option("--kind", src.kind, "Override feature kind");
  };

  RankOptions ro;
  auto* rank_cmd = app.add_subcommand("rank", "Rank items by novelty");
  add_source(rank_cmd, ro.source);
  rank_cmd->add_option("--method", ro.method, "demud, svd or random")->capture_default_str();
  rank_cmd->add_option("--k", ro.k, "Maximum components ('auto' = min(n, d))")->capture_default_str();
  rank_cmd->add_option("--n", ro.n, "Number of selections")->required();
  rank_cmd->add_option("--seed", ro.seed, "Seed (random method)")->capture_default_str();
  rank_cmd->add_option("--t", ro.t, "Evaluation depth recorded in the manifest");
  rank_cmd->add_option("--out", ro.out, "Output directory")->required();
  rank_cmd->add_option("--side", ro.side, "Image side for pixel renders (default: inferred)");
  rank_cmd->add_flag("--explain-svd", ro.explain_svd, "Export explanations for the svd method");

  EvalOptions eo;
  auto* eval_cmd = app.add_subcommand("eval", "Discovery curve and nAUC of a manifest");
  eval_cmd->add_option("--manifest", eo.manifest)->required();
  eval_cmd->add_option("--labels", eo.labels, "CSV id,label")->required();
  eval_cmd->add_option("--t", eo.t, "Selections to evaluate (default: random cover time, max 300)");
  eval_cmd->add_option("--trials", eo.trials, "Random-baseline trials")->capture_default_str();
  eval_cmd->add_option("--seed", eo.seed)->capture_default_str();
  eval_cmd->add_option("--out", eo.out, "Report JSON path");
  eval_cmd->add_option("--features", eo.features, "Feature file to verify against the manifest digest");
  eval_cmd->add_flag("--allow-digest-mismatch", eo.allow_digest_mismatch);

  ExplainOptions xo;
  auto* explain_cmd = app.add_subcommand("explain", "Recompute one round's explanation");
  add_source(explain_cmd, xo.source);
  explain_cmd->add_option("--manifest", xo.manifest)->required();
  explain_cmd->add_option("--round", xo.round)->required();
  explain_cmd->add_option("--out", xo.out, "Output directory")->required();
  explain_cmd->add_option("--side", xo.side, "Image side for pixel renders (default: inferred)");
  explain_cmd->add_flag("--allow-digest-mismatch", xo.allow_digest_mismatch);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*featurize_cmd) return featurize(fo, out, err);
    if (*rank_cmd) return rank(ro, out);
    if (*eval_cmd) return evaluate(eo, out, err);
    if (*explain_cmd) return explain(xo, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace demud
