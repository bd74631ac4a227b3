#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "demud/cli.hpp"
#include "demud/features.hpp"
#include "demud/io.hpp"
#include "demud/manifest.hpp"
#include "demud/rng.hpp"
#include "test_support.hpp"

using namespace demud;
using namespace demud::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run demud_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "demud");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path clusters() { return data_dir() / "synthetic" / "clusters.npy"; }

fs::path write_manifest(const fs::path& dir, const std::vector<std::string>& ids) {
  Manifest m;
  m.header.tool_version = kToolVersion;
  m.header.method = Method::svd;
  m.header.k = 1;
  m.header.n = ids.size();
  m.header.feature_digest = "sha256:none";
  for (std::size_t i = 0; i < ids.size(); ++i) m.records.push_back({i + 1, ids[i], i, 1.0});
  const auto path = dir / "manifest.jsonl";
  write_file_atomic(path, encode_manifest(m));
  return path;
}

void write_labels(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ofstream f(path);
  f << "id,label\n";
  for (const auto& [id, label] : rows) f << id << "," << label << "\n";
}

}  // namespace

TEST_CASE("featurize three PNGs into pixel features") {
  const auto dir = scratch_dir("cli_pixels");
  fs::create_directories(dir / "in");
  for (const char* f : {"a_wide.png", "b_square.png", "c_tall.png"}) fs::copy_file(data_dir() / "images" / f, dir / "in" / f);
  const auto r = demud_cli({"featurize", "--input", (dir / "in").string(), "--mode", "pixel", "--out", (dir / "px.npy").string()});
  REQUIRE(r.code == 0);
  const auto a = read_npy(dir / "px.npy");
  CHECK(a.dtype == NpyDtype::float32);
  CHECK(a.values.rows() == 3);
  CHECK(a.values.cols() == 154587);
  const auto X = load_npy(dir / "px.npy");
  CHECK(X.ids() == std::vector<std::string>{"a_wide", "b_square", "c_tall"});
  CHECK(X.kind() == FeatureKind::pixel);
  CHECK(X.item(1) == pixel_features(read_image(data_dir() / "images" / "b_square.png")));

  const auto ranked = demud_cli({"rank", "--features", (dir / "px.npy").string(), "--n", "3", "--out", (dir / "rank").string()});
  REQUIRE(ranked.code == 0);
  for (int i = 1; i <= 3; ++i) {
    CHECK(fs::exists(dir / "rank" / "renders" / ("sel_" + std::to_string(i) + "_recon.png")));
    CHECK(fs::exists(dir / "rank" / "renders" / ("sel_" + std::to_string(i) + "_resid.png")));
  }
}

TEST_CASE("featurize skips corrupt images and reports them") {
  const auto dir = scratch_dir("cli_corrupt");
  const auto r = demud_cli({"featurize", "--input", (data_dir() / "images").string(), "--mode", "pixel", "--side", "16",
                            "--out", (dir / "px.npy").string()});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("z_corrupt.png") != std::string::npos);
  const auto X = load_npy(dir / "px.npy");
  CHECK(X.rows() == 4);
  CHECK(X.cols() == 16 * 16 * 3);
  const auto report = json::parse(read_file(dir / "px.report.json"));
  REQUIRE(report.at("skipped").size() == 1);
  CHECK(report.at("skipped")[0].at("file") == "z_corrupt.png");

  fs::create_directories(dir / "bad");
  fs::copy_file(data_dir() / "images" / "z_corrupt.png", dir / "bad" / "z.png");
  CHECK(demud_cli({"featurize", "--input", (dir / "bad").string(), "--mode", "pixel", "--out", (dir / "b.npy").string()}).code == 2);
  fs::create_directories(dir / "empty");
  CHECK(demud_cli({"featurize", "--input", (dir / "empty").string(), "--mode", "pixel", "--out", (dir / "e.npy").string()}).code == 2);
  CHECK(demud_cli({"featurize", "--input", (dir / "empty").string(), "--mode", "sift", "--out", (dir / "e.npy").string()}).code == 1);
}

TEST_CASE("bow featurization matches the golden histograms") {
  const auto dir = scratch_dir("cli_bow");
  const auto r = demud_cli({"featurize", "--input", (data_dir() / "descriptors").string(), "--mode", "bow", "--k-sift", "5",
                            "--seed", "0", "--out", (dir / "bow.npy").string()});
  REQUIRE(r.code == 0);
  CHECK(read_file(dir / "bow.npy") == read_file(data_dir() / "golden" / "bow_k5_seed0.npy"));
  CHECK(read_file(dir / "bow.codebook.npy") == read_file(data_dir() / "golden" / "bow_k5_seed0.codebook.npy"));
  const auto X = load_npy(dir / "bow.npy");
  CHECK(X.kind() == FeatureKind::bow);
  CHECK(X.ids().front() == "img_0");
  CHECK(X.data().row(2).sum() == 0.0);
  CHECK(X.data().row(5).sum() == 40.0);
  CHECK(demud_cli({"featurize", "--input", (data_dir() / "descriptors").string(), "--mode", "bow", "--out",
                   (dir / "nok.npy").string()}).code == 1);
}

TEST_CASE("rank reproduces the golden manifest") {
  const auto dir = scratch_dir("cli_rank_golden");
  const auto r = demud_cli({"rank", "--features", clusters().string(), "--method", "demud", "--k", "5", "--n", "20", "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(read_file(dir / "manifest.jsonl") == read_file(data_dir() / "golden" / "rank_demud_k5_n20.jsonl"));
  const auto m = read_manifest(dir / "manifest.jsonl");
  CHECK(m.header.feature_digest == "sha256:" + sha256_file(clusters()));
  CHECK(m.records.size() == 20);
}

TEST_CASE("random rank is reproducible from its seed") {
  const auto a = scratch_dir("cli_rand_a"), b = scratch_dir("cli_rand_b"), c = scratch_dir("cli_rand_c");
  for (const auto& [dir, seed] : {std::pair{a, "5"}, {b, "5"}, {c, "6"}}) {
    REQUIRE(demud_cli({"rank", "--features", clusters().string(), "--method", "random", "--seed", seed, "--n", "90",
                       "--out", dir.string()}).code == 0);
  }
  CHECK(read_file(a / "manifest.jsonl") == read_file(b / "manifest.jsonl"));
  CHECK(read_file(a / "manifest.jsonl") != read_file(c / "manifest.jsonl"));
  const auto m = read_manifest(a / "manifest.jsonl");
  CHECK(m.header.rng == Rng::kName);
  for (const auto& rec : m.records) CHECK_FALSE(rec.score.has_value());
  CHECK_FALSE(fs::exists(a / "explanations"));
}

TEST_CASE("a single demud selection is the svd top item") {
  const auto d = scratch_dir("cli_n1_demud"), s = scratch_dir("cli_n1_svd");
  REQUIRE(demud_cli({"rank", "--features", clusters().string(), "--n", "1", "--k", "4", "--out", d.string()}).code == 0);
  REQUIRE(demud_cli({"rank", "--features", clusters().string(), "--method", "svd", "--n", "1", "--k", "4", "--out", s.string()}).code == 0);
  const auto md = read_manifest(d / "manifest.jsonl"), ms = read_manifest(s / "manifest.jsonl");
  REQUIRE(md.records.size() == 1);
  CHECK(md.records[0].item_id == ms.records[0].item_id);
  CHECK(*md.records[0].score == *ms.records[0].score);
}

TEST_CASE("rank rejects bad arguments") {
  const auto dir = scratch_dir("cli_rank_bad");
  CHECK(demud_cli({"rank", "--features", clusters().string(), "--n", "91", "--out", dir.string()}).code == 1);
  CHECK(demud_cli({"rank", "--features", clusters().string(), "--n", "3", "--method", "pca", "--out", dir.string()}).code == 1);
  CHECK(demud_cli({"rank", "--features", clusters().string(), "--n", "3", "--k", "many", "--out", dir.string()}).code == 1);
  CHECK(demud_cli({"rank", "--n", "3", "--out", dir.string()}).code == 1);
  CHECK(demud_cli({"rank", "--features", (data_dir() / "npy_malformed" / "bad_magic.npy").string(), "--n", "1", "--out",
                   dir.string()}).code == 2);
  CHECK(demud_cli({"rank", "--features", (dir / "missing.npy").string(), "--n", "1", "--out", dir.string()}).code == 2);
  CHECK(demud_cli({}).code == 1);
}

TEST_CASE("eval of a perfect ordering scores 100") {
  const auto dir = scratch_dir("cli_eval_perfect");
  const auto manifest = write_manifest(dir, {"a", "b", "c", "d", "e"});
  write_labels(dir / "labels.csv", {{"a", "A"}, {"b", "B"}, {"c", "C"}, {"d", "C"}, {"e", "A"}});
  const auto r = demud_cli({"eval", "--manifest", manifest.string(), "--labels", (dir / "labels.csv").string(), "--t", "5",
                            "--out", (dir / "report.json").string()});
  REQUIRE(r.code == 0);
  const auto report = json::parse(read_file(dir / "report.json"));
  CHECK(report.at("nauc").get<double>() == 100.0);
  CHECK(report.at("curve") == json::array({1, 2, 3, 3, 3}));
  CHECK(report.at("t") == 5);
  CHECK(report.at("random_baseline").at("trials") == 1000);
  CHECK(report.at("random_baseline").at("mean").get<double>() < 100.0);
}

TEST_CASE("eval of the hand case scores 83.33") {
  const auto dir = scratch_dir("cli_eval_hand");
  const auto manifest = write_manifest(dir, {"a", "b", "c", "d", "e"});
  write_labels(dir / "labels.csv", {{"a", "A"}, {"b", "A"}, {"c", "B"}, {"d", "C"}, {"e", "B"}});
  const auto r = demud_cli({"eval", "--manifest", manifest.string(), "--labels", (dir / "labels.csv").string(), "--t", "5"});
  REQUIRE(r.code == 0);
  const auto report = json::parse(r.out);
  CHECK(std::abs(report.at("nauc").get<double>() - 250.0 / 3.0) <= 1e-9);

  // Without --t the depth comes from the random cover time.
  const auto auto_t = demud_cli({"eval", "--manifest", manifest.string(), "--labels", (dir / "labels.csv").string()});
  REQUIRE(auto_t.code == 0);
  const auto auto_report = json::parse(auto_t.out);
  CHECK(auto_report.at("t_provenance").at("source") == "random-cover");
  CHECK(auto_report.at("t").get<std::size_t>() <= 5);
}

TEST_CASE("eval names the id that has no label") {
  const auto dir = scratch_dir("cli_eval_missing");
  const auto manifest = write_manifest(dir, {"a", "ghost", "c"});
  write_labels(dir / "labels.csv", {{"a", "A"}, {"c", "B"}});
  const auto r = demud_cli({"eval", "--manifest", manifest.string(), "--labels", (dir / "labels.csv").string(), "--t", "2"});
  CHECK(r.code != 0);
  CHECK(r.err.find("ghost") != std::string::npos);
}

TEST_CASE("eval on the synthetic clusters beats random") {
  const auto dir = scratch_dir("cli_eval_syn");
  REQUIRE(demud_cli({"rank", "--features", clusters().string(), "--k", "5", "--n", "30", "--out", dir.string()}).code == 0);
  const auto r = demud_cli({"eval", "--manifest", (dir / "manifest.jsonl").string(), "--labels",
                            (data_dir() / "synthetic" / "labels.csv").string(), "--features", clusters().string()});
  REQUIRE(r.code == 0);
  const auto report = json::parse(r.out);
  CHECK(report.at("nauc").get<double>() > report.at("random_baseline").at("mean").get<double>());
}

TEST_CASE("explain recomputes exactly what rank exported") {
  const auto dir = scratch_dir("cli_explain");
  REQUIRE(demud_cli({"rank", "--features", clusters().string(), "--k", "5", "--n", "12", "--out", (dir / "rank").string()}).code == 0);
  const auto manifest = read_manifest(dir / "rank" / "manifest.jsonl");
  for (std::size_t round = 1; round <= 12; ++round) {
    const auto out = dir / ("r" + std::to_string(round));
    const auto r = demud_cli({"explain", "--features", clusters().string(), "--manifest", (dir / "rank" / "manifest.jsonl").string(),
                              "--round", std::to_string(round), "--out", out.string()});
    REQUIRE(r.code == 0);
    const std::string stem = "sel_" + std::to_string(round);
    for (const char* suffix : {".json", "_recon.npy", "_resid.npy", "_resid_shifted.npy"}) {
      CAPTURE(round);
      CAPTURE(suffix);
      CHECK(read_file(out / (stem + suffix)) == read_file(dir / "rank" / "explanations" / (stem + suffix)));
    }
    const auto meta = json::parse(read_file(out / (stem + ".json")));
    CHECK(meta.at("score").get<double>() == *manifest.records[round - 1].score);
  }

  // Round 1 is explained against the full-data model.
  const auto X = load_npy(clusters());
  const auto full = fit_batch(X, 5);
  const auto& first = manifest.records[0];
  const Vector res = residual(full, X.item(first.item_index));
  CHECK(std::abs(euclidean_norm(res) - *first.score) <= 1e-10 * *first.score);
  const auto stored = read_npy(dir / "r1" / "sel_1_resid.npy").values;
  for (Eigen::Index j = 0; j < res.size(); ++j) CHECK(stored(0, j) == static_cast<double>(static_cast<float>(res(j))));
}

TEST_CASE("explain rejects invalid rounds and foreign manifests") {
  const auto dir = scratch_dir("cli_explain_bad");
  REQUIRE(demud_cli({"rank", "--features", clusters().string(), "--k", "3", "--n", "4", "--out", (dir / "d").string()}).code == 0);
  REQUIRE(demud_cli({"rank", "--features", clusters().string(), "--method", "svd", "--n", "4", "--out", (dir / "s").string()}).code == 0);
  const auto manifest = (dir / "d" / "manifest.jsonl").string();
  auto explain = [&](const std::string& m, const std::string& round) {
    return demud_cli({"explain", "--features", clusters().string(), "--manifest", m, "--round", round, "--out", (dir / "x").string()});
  };
  CHECK(explain(manifest, "0").code == 1);
  CHECK(explain(manifest, "5").code == 1);
  CHECK(explain((dir / "s" / "manifest.jsonl").string(), "1").code == 1);
  CHECK(explain(manifest, "4").code == 0);
}

TEST_CASE("a substituted feature file is detected") {
  const auto dir = scratch_dir("cli_digest");
  fs::copy_file(clusters(), dir / "clusters.npy");
  fs::copy_file(data_dir() / "synthetic" / "clusters.ids.txt", dir / "clusters.ids.txt");
  REQUIRE(demud_cli({"rank", "--features", (dir / "clusters.npy").string(), "--k", "3", "--n", "5", "--out", (dir / "r").string()}).code == 0);

  auto bytes = read_file(dir / "clusters.npy");
  bytes[bytes.size() - 3] ^= 0x01;
  write_file_atomic(dir / "clusters.npy", bytes);
  const auto manifest = (dir / "r" / "manifest.jsonl").string();
  const auto refused = demud_cli({"explain", "--features", (dir / "clusters.npy").string(), "--manifest", manifest, "--round", "2",
                                  "--out", (dir / "x").string()});
  CHECK(refused.code == 2);
  CHECK(refused.err.find("digest") != std::string::npos);
  const auto forced = demud_cli({"explain", "--features", (dir / "clusters.npy").string(), "--manifest", manifest, "--round", "2",
                                 "--out", (dir / "x").string(), "--allow-digest-mismatch"});
  CHECK(forced.code == 0);
  CHECK(forced.err.find("digest") != std::string::npos);

  CHECK(demud_cli({"eval", "--manifest", manifest, "--labels", (data_dir() / "synthetic" / "labels.csv").string(), "--features",
                   (dir / "clusters.npy").string(), "--t", "3"}).code == 2);
}
