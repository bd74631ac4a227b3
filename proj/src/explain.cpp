#include "demud/explain.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "demud/error.hpp"
#include "demud/io.hpp"
#include "demud/npy.hpp"

namespace demud {

namespace {

double sequential_mean(const ConstVectorRef& v) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) sum += v(i);
  return sum / static_cast<double>(v.size());
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

Explanation make_explanation(const SubspaceModel& model, const ConstVectorRef& x, std::string item_id,
                             std::size_t round) {
  Explanation e;
  e.item_id = std::move(item_id);
  e.round = round;
  e.selected = x;
  e.reconstruction = reconstruct(model, e.selected);
  e.residual = e.selected - e.reconstruction;
  e.shifted_residual = shift_residual(e.residual, e.reconstruction);
  e.score = euclidean_norm(e.residual);
  return e;
}

Vector shift_residual(const ConstVectorRef& residual, const ConstVectorRef& reconstruction) {
  if (residual.size() != reconstruction.size()) {
    throw DimensionError("residual and reconstruction lengths differ");
  }
  if (residual.size() == 0) return Vector(0);
  const double offset = sequential_mean(reconstruction) - sequential_mean(residual);
  return residual.array() + offset;
}

ExplanationImages render_pixel_explanation(const Explanation& e, std::size_t side) {
  const auto expected = side * side * Image::kChannels;
  if (side == 0 || static_cast<std::size_t>(e.selected.size()) != expected ||
      static_cast<std::size_t>(e.reconstruction.size()) != expected ||
      static_cast<std::size_t>(e.residual.size()) != expected) {
    throw DimensionError("explanation length does not match a " + std::to_string(side) + "x" +
                         std::to_string(side) + " RGB image");
  }
  ExplanationImages out{Image(side, side), Image(side, side)};
  for (std::size_t i = 0; i < expected; ++i) {
    out.reconstruction.data[i] = quantize(e.reconstruction(static_cast<Eigen::Index>(i)));
  }

  const double lo = e.residual.minCoeff();
  const double hi = e.residual.maxCoeff();
  if (!(hi > lo)) {
    std::fill(out.residual.data.begin(), out.residual.data.end(), std::uint8_t{128});
  } else {
    const double range = hi - lo;
    for (std::size_t i = 0; i < expected; ++i) {
      out.residual.data[i] = quantize((e.residual(static_cast<Eigen::Index>(i)) - lo) / range * 255.0);
    }
  }
  return out;
}

void export_explanation(const Explanation& e, FeatureKind kind, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  const std::string stem = "sel_" + std::to_string(e.round);
  auto as_row = [](const Vector& v) -> RowMatrix { return v.transpose(); };
  write_npy(dir / (stem + "_recon.npy"), as_row(e.reconstruction), NpyDtype::float32);
  write_npy(dir / (stem + "_resid.npy"), as_row(e.residual), NpyDtype::float32);
  write_npy(dir / (stem + "_resid_shifted.npy"), as_row(e.shifted_residual), NpyDtype::float32);

  // Scores go through format_double so the metadata matches the manifest text.
  const std::string meta = "{\"id\": " + nlohmann::json(e.item_id).dump() +
                           ", \"round\": " + std::to_string(e.round) +
                           ", \"score\": " + format_double(e.score) +
                           ", \"feature_kind\": " + nlohmann::json(std::string(to_string(kind))).dump() +
                           ", \"dim\": " + std::to_string(e.selected.size()) + "}\n";
  write_file_atomic(dir / (stem + ".json"), meta);
}

void export_explanation_images(const Explanation& e, std::size_t side, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  const auto images = render_pixel_explanation(e, side);
  const std::string stem = "sel_" + std::to_string(e.round);
  write_png(images.reconstruction, dir / (stem + "_recon.png"));
  write_png(images.residual, dir / (stem + "_resid.png"));
}

}  // namespace demud
