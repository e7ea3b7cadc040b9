#pragma once

// PESV model files:
//   "PESV" | u16 version | u64 header length | header JSON
//   | per machine: support-vector count x dimension f32 (row-major)
// The header carries classes, scheme, C, gamma, the feature fingerprint, the standardizer and,
// per machine, its class pair, bias, dual coefficients and support-vector pool ids.

#include "pefusion/svm/multiclass.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace pefusion::svm {

inline constexpr std::uint16_t model_file_version = 1;

/// Support vectors must already be representable as f32; otherwise the round trip is not exact.
[[nodiscard]] std::string encode_model(const MulticlassModel &model);
[[nodiscard]] MulticlassModel decode_model(std::string_view bytes, const std::string &source = "<memory>");

void write_model(const std::filesystem::path &path, const MulticlassModel &model);
[[nodiscard]] MulticlassModel read_model(const std::filesystem::path &path);

}  // namespace pefusion::svm
