#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>

#include "demud/feature_matrix.hpp"
#include "demud/image.hpp"
#include "demud/subspace.hpp"

namespace demud {

/// What the model could and could not represent about one selected item.
struct Explanation {
  std::string item_id;
  std::size_t round = 0;
  Vector selected;
  Vector reconstruction;
  Vector residual;
  /// Residual translated so its mean matches the reconstruction's mean.
  Vector shifted_residual;
  double score = 0.0;
};

/// Explanation of x against `model`, which must be the model *before* x is
/// incorporated.
Explanation make_explanation(const SubspaceModel& model, const ConstVectorRef& x, std::string item_id,
                             std::size_t round);

/// r + 1 * (mean(reconstruction) - mean(r)).
Vector shift_residual(const ConstVectorRef& residual, const ConstVectorRef& reconstruction);

struct ExplanationImages {
  Image reconstruction;
  Image residual;
};

/// Pixel-feature explanations as images. The reconstruction is clamped to
/// [0, 255]; the residual is min-max scaled over all channels at once (a
/// constant residual renders as uniform 128).
ExplanationImages render_pixel_explanation(const Explanation& e, std::size_t side);

/// Writes sel_{round}_recon.npy, sel_{round}_resid.npy,
/// sel_{round}_resid_shifted.npy (shape (1, d), float32) and sel_{round}.json.
void export_explanation(const Explanation& e, FeatureKind kind, const std::filesystem::path& dir);

/// Writes sel_{round}_recon.png and sel_{round}_resid.png.
void export_explanation_images(const Explanation& e, std::size_t side, const std::filesystem::path& dir);

}  // namespace demud
