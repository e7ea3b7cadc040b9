#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace pefusion {

/// Lower-case hex SHA-256 of a byte string.
[[nodiscard]] std::string sha256_hex(std::string_view bytes);
[[nodiscard]] std::string sha256_file(const std::filesystem::path &path);

/// Plain-text registry: one "<name> <sha256>" pair per line, '#' starts a comment.
using ChecksumRegistry = std::map<std::string, std::string>;

[[nodiscard]] ChecksumRegistry read_checksum_registry(const std::filesystem::path &path);

/// Throws FormatError(bad_value) if the file's name is registered with a different digest.
/// Returns false when the file is not listed.
bool verify_checksum(const std::filesystem::path &file, const ChecksumRegistry &registry);

}  // namespace pefusion
