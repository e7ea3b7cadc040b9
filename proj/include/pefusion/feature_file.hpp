#pragma once

// PEFM feature-matrix files:
//   "PEFM" | u16 version | u64 rows | u64 cols | rows*cols f32 (row-major)
//   | u64 manifest byte length | manifest JSON (UTF-8)
// All integers and floats little-endian.

#include "pefusion/fusion.hpp"
#include "pefusion/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace pefusion::fusion {

inline constexpr std::uint16_t feature_file_version = 1;

struct FeatureFile {
    Matrix features;
    FeatureManifest manifest;
};

/// Values are stored as f32; the manifest's total_dim must equal the column count.
[[nodiscard]] std::string encode_feature_file(const Matrix &features, const FeatureManifest &manifest);
[[nodiscard]] FeatureFile decode_feature_file(std::string_view bytes, const std::string &source = "<memory>");

void write_feature_file(const std::filesystem::path &path, const Matrix &features, const FeatureManifest &manifest);
[[nodiscard]] FeatureFile read_feature_file(const std::filesystem::path &path);

/// Whole-file read helper shared by the binary formats.
[[nodiscard]] std::string read_file_bytes(const std::filesystem::path &path);
/// Writes via a temporary sibling and renames, so readers never observe partial files.
void write_file_bytes(const std::filesystem::path &path, std::string_view bytes);

}  // namespace pefusion::fusion
