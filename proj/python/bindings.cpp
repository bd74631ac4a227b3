#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "demud/error.hpp"
#include "demud/eval.hpp"
#include "demud/explain.hpp"
#include "demud/features.hpp"
#include "demud/manifest.hpp"
#include "demud/selectors.hpp"
#include "demud/subspace.hpp"

namespace py = pybind11;
using namespace demud;

namespace {

std::vector<std::string> default_ids(std::size_t n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

FeatureMatrix to_features(const RowMatrix& data, std::optional<std::vector<std::string>> ids,
                          const std::string& kind) {
  auto resolved = ids ? std::move(*ids) : default_ids(static_cast<std::size_t>(data.rows()));
  return FeatureMatrix(std::move(resolved), data, parse_feature_kind(kind));
}

py::dict record_dict(const SelectionRecord& r) {
  py::dict d;
  d["round"] = r.round;
  d["id"] = r.item_id;
  d["index"] = r.item_index;
  d["score"] = r.score ? py::cast(*r.score) : py::none();
  return d;
}

py::list records_list(const RankingResult& result) {
  py::list out;
  for (const auto& r : result.records) out.append(record_dict(r));
  return out;
}

}  // namespace

PYBIND11_MODULE(_demud, m) {
  m.doc() = "Novelty ranking by incremental-SVD reconstruction error, with explanations.";
  m.attr("__version__") = kToolVersion;

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<SubspaceModel>(m, "SubspaceModel")
      .def_property_readonly("basis", &SubspaceModel::basis)
      .def_property_readonly("singular_values", &SubspaceModel::singular_values)
      .def_property_readonly("mean", &SubspaceModel::mean)
      .def_property_readonly("count", &SubspaceModel::count)
      .def_property_readonly("cap", &SubspaceModel::cap)
      .def_property_readonly("rank", &SubspaceModel::rank)
      .def("__repr__", [](const SubspaceModel& s) {
        return "<SubspaceModel dim=" + std::to_string(s.dim()) + " rank=" + std::to_string(s.rank()) +
               " count=" + std::to_string(s.count()) + ">";
      });

  m.def("fit_batch", [](const RowMatrix& X, std::size_t cap) { return fit_batch(X, cap); }, py::arg("X"),
        py::arg("cap"));
  m.def("init_singleton", &init_singleton, py::arg("x"), py::arg("cap"));
  m.def("update", &update, py::arg("model"), py::arg("x"));
  m.def("reconstruct", &reconstruct, py::arg("model"), py::arg("x"));
  m.def("residual", &residual, py::arg("model"), py::arg("x"));
  m.def("score", &score, py::arg("model"), py::arg("x"));
  m.def("score_all", [](const SubspaceModel& model, const RowMatrix& X) { return score_all(model, X); },
        py::arg("model"), py::arg("X"));

  py::class_<Explanation>(m, "Explanation")
      .def_readonly("item_id", &Explanation::item_id)
      .def_readonly("round", &Explanation::round)
      .def_readonly("selected", &Explanation::selected)
      .def_readonly("reconstruction", &Explanation::reconstruction)
      .def_readonly("residual", &Explanation::residual)
      .def_readonly("shifted_residual", &Explanation::shifted_residual)
      .def_readonly("score", &Explanation::score);

  m.def("make_explanation", &make_explanation, py::arg("model"), py::arg("x"), py::arg("item_id") = "",
        py::arg("round") = 0);
  m.def("shift_residual", &shift_residual, py::arg("residual"), py::arg("reconstruction"));

  m.def(
      "demud_rank",
      [](const RowMatrix& X, std::size_t cap, std::size_t n_select, std::optional<std::vector<std::string>> ids) {
        const auto features = to_features(X, std::move(ids), "generic");
        auto out = demud_rank(features, cap, n_select);
        return py::make_tuple(records_list(out.ranking), out.explanations);
      },
      py::arg("X"), py::arg("cap"), py::arg("n_select"), py::arg("ids") = py::none(),
      "Returns (records, explanations).");
  m.def(
      "svd_rank",
      [](const RowMatrix& X, std::size_t cap, std::size_t n_select, std::optional<std::vector<std::string>> ids) {
        return records_list(svd_rank(to_features(X, std::move(ids), "generic"), cap, n_select));
      },
      py::arg("X"), py::arg("cap"), py::arg("n_select"), py::arg("ids") = py::none());
  m.def(
      "random_rank",
      [](const RowMatrix& X, std::uint64_t seed, std::size_t n_select, std::optional<std::vector<std::string>> ids) {
        return records_list(random_rank(to_features(X, std::move(ids), "generic"), seed, n_select));
      },
      py::arg("X"), py::arg("seed"), py::arg("n_select"), py::arg("ids") = py::none());

  m.def(
      "discovery_curve",
      [](const std::vector<std::string>& selected_labels, std::size_t classes, std::size_t t) {
        return discovery_curve(selected_labels, classes, t).counts;
      },
      py::arg("selected_labels"), py::arg("classes"), py::arg("t"));
  m.def(
      "nauc",
      [](const std::vector<std::size_t>& counts, std::size_t classes) {
        return nauc(DiscoveryCurve{counts, classes});
      },
      py::arg("counts"), py::arg("classes"));
  m.def(
      "random_baseline",
      [](const std::vector<std::string>& labels, std::size_t t, std::size_t trials, std::uint64_t seed) {
        const auto stats = random_baseline(labels, t, trials, seed);
        return py::make_tuple(stats.mean, stats.stddev);
      },
      py::arg("labels"), py::arg("t"), py::arg("trials") = 1000, py::arg("seed") = 0);
  m.def(
      "choose_t",
      [](const std::vector<std::string>& labels, std::size_t cap_t, std::uint64_t seed) {
        return choose_t(labels, cap_t, seed).t;
      },
      py::arg("labels"), py::arg("cap_t") = 300, py::arg("seed") = 0);

  m.def(
      "load_npy",
      [](const std::filesystem::path& path) {
        const auto X = load_npy(path);
        return py::make_tuple(X.data(), X.ids(), std::string(to_string(X.kind())));
      },
      py::arg("path"), "Returns (data, ids, feature_kind).");
  m.def(
      "save_npy",
      [](const RowMatrix& data, const std::filesystem::path& path, std::optional<std::vector<std::string>> ids,
         const std::string& kind, bool float32) {
        save_npy(to_features(data, std::move(ids), kind), path, float32 ? NpyDtype::float32 : NpyDtype::float64);
      },
      py::arg("data"), py::arg("path"), py::arg("ids") = py::none(), py::arg("kind") = "generic",
      py::arg("float32") = false);
}
