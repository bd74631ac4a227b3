#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace demud {

/// 8-bit RGB image, row-major with the channel as the last axis.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> data;

  static constexpr std::size_t kChannels = 3;

  Image() = default;
  Image(std::size_t w, std::size_t h) : width(w), height(h), data(w * h * kChannels, 0) {}

  std::uint8_t& at(std::size_t row, std::size_t col, std::size_t ch) {
    return data[(row * width + col) * kChannels + ch];
  }
  std::uint8_t at(std::size_t row, std::size_t col, std::size_t ch) const {
    return data[(row * width + col) * kChannels + ch];
  }
  bool valid() const { return width > 0 && height > 0 && data.size() == width * height * kChannels; }
};

/// Decodes a PNG or JPEG file (detected from its signature) into RGB.
/// Grayscale and alpha inputs are converted; throws DataError on corrupt data.
Image read_image(const std::filesystem::path& path);

/// Encodes an 8-bit RGB PNG, written atomically.
void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace demud
