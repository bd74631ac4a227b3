#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "demud/feature_matrix.hpp"

namespace demud {

enum class NpyDtype { float32, float64 };

/// A 2-D little-endian floating point array as stored in an NPY v1.0 file.
/// Zero-row arrays are allowed here (per-image descriptor files may be
/// empty); FeatureMatrix-level validation happens in load_npy.
struct NpyArray {
  NpyDtype dtype = NpyDtype::float64;
  RowMatrix values;
};

/// Parses NPY v1.0 bytes. Throws DataError on bad magic, unsupported version
/// or dtype, fortran_order=True, non-2-D shape or a short payload.
NpyArray parse_npy(std::string_view bytes);
NpyArray read_npy(const std::filesystem::path& path);

/// Encodes a C-order 2-D array. Header padded so the payload starts on a
/// 64-byte boundary.
std::string encode_npy(const Eigen::Ref<const RowMatrix>& values, NpyDtype dtype);
void write_npy(const std::filesystem::path& path, const Eigen::Ref<const RowMatrix>& values,
               NpyDtype dtype);

}  // namespace demud
