#include "pefusion/feature_file.hpp"

#include "pefusion/binary_io.hpp"
#include "pefusion/error.hpp"

#include <fstream>
#include <limits>
#include <sstream>

namespace pefusion::fusion {

namespace {
constexpr std::string_view magic = "PEFM";
}

std::string encode_feature_file(const Matrix &features, const FeatureManifest &manifest) {
    if (static_cast<std::size_t>(features.cols()) != manifest.total_dim) {
        throw DimensionMismatch("feature matrix has " + std::to_string(features.cols()) + " columns, manifest declares " +
                                std::to_string(manifest.total_dim));
    }
    std::string out;
    out.reserve(22 + static_cast<std::size_t>(features.size()) * 4 + 4096);
    out.append(magic);
    binary::put_u16(out, feature_file_version);
    binary::put_u64(out, static_cast<std::uint64_t>(features.rows()));
    binary::put_u64(out, static_cast<std::uint64_t>(features.cols()));
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        for (Eigen::Index c = 0; c < features.cols(); ++c) {
            binary::put_f32(out, static_cast<float>(features(r, c)));
        }
    }
    const std::string json = manifest.to_json().dump();
    binary::put_u64(out, json.size());
    out.append(json);
    return out;
}

FeatureFile decode_feature_file(std::string_view bytes, const std::string &source) {
    binary::Reader in(bytes, source);
    if (bytes.size() < magic.size() || in.take(magic.size()) != magic) {
        throw FormatError(FormatError::Kind::bad_magic, source + ": not a PEFM feature file");
    }
    const auto version = in.u16();
    if (version != feature_file_version) {
        throw FormatError(FormatError::Kind::unsupported_version,
                          source + ": unsupported PEFM version " + std::to_string(version));
    }
    const auto rows = in.u64();
    const auto cols = in.u64();
    if (rows > (std::uint64_t{1} << 40) || cols > (std::uint64_t{1} << 32)) {
        throw FormatError(FormatError::Kind::bad_header, source + ": implausible matrix dimensions");
    }
    // Reject sizes the payload cannot hold before allocating anything.
    if (cols != 0 && rows > in.remaining() / 4 / cols) {
        throw FormatError(FormatError::Kind::truncated, source + ": header declares " + std::to_string(rows) + "x" +
                                                            std::to_string(cols) + " values but the file is shorter");
    }
    FeatureFile file;
    file.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < file.features.rows(); ++r) {
        for (Eigen::Index c = 0; c < file.features.cols(); ++c) {
            file.features(r, c) = in.f32();
        }
    }
    const auto json_len = in.u64();
    if (json_len > in.remaining()) {
        throw FormatError(FormatError::Kind::truncated, source + ": manifest length exceeds file size");
    }
    const auto json_text = in.take(json_len);
    in.expect_end();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception &e) {
        throw FormatError(FormatError::Kind::bad_header, source + ": manifest is not valid JSON");
    }
    file.manifest = FeatureManifest::from_json(j);
    if (file.manifest.total_dim != cols) {
        throw FormatError(FormatError::Kind::count_mismatch,
                          source + ": manifest total_dim " + std::to_string(file.manifest.total_dim) +
                              " disagrees with column count " + std::to_string(cols));
    }
    return file;
}

std::string read_file_bytes(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file_bytes(const std::filesystem::path &path, std::string_view bytes) {
    auto tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + path.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            std::filesystem::remove(tmp);
            throw IoError("short write to " + path.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

void write_feature_file(const std::filesystem::path &path, const Matrix &features, const FeatureManifest &manifest) {
    write_file_bytes(path, encode_feature_file(features, manifest));
}

FeatureFile read_feature_file(const std::filesystem::path &path) {
    return decode_feature_file(read_file_bytes(path), path.string());
}

}  // namespace pefusion::fusion
