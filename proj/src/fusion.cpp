#include "pefusion/fusion.hpp"

#include "pefusion/digest.hpp"
#include "pefusion/error.hpp"
#include "pefusion/parallel.hpp"

#include <fstream>
#include <set>

namespace pefusion::fusion {

namespace {

using nlohmann::json;

const char *channel_suffix(std::size_t channel, std::size_t count) {
    static constexpr const char *rgb[] = {"r", "g", "b"};
    if (count == 3) {
        return rgb[channel];
    }
    return nullptr;
}

std::size_t plane_feature_count(const PipelineConfig &c) {
    const std::size_t h = c.image_height;
    const std::size_t w = c.image_width;
    return h + w + 2 * c.directional().line_count() + c.patch.patch_count(h, w) + (h - 1) + (w - 1) +
           c.hog.feature_count(h, w) + c.lbp.bin_count();
}

void check_geometry(std::size_t height, std::size_t width, std::size_t channels, const PipelineConfig &config) {
    if (height != config.image_height || width != config.image_width) {
        throw DimensionMismatch("image geometry " + std::to_string(height) + "x" + std::to_string(width) +
                                " does not match the pipeline config (" + std::to_string(config.image_height) + "x" +
                                std::to_string(config.image_width) + ")");
    }
    if (channels != config.channels) {
        throw DimensionMismatch("image has " + std::to_string(channels) + " channels, pipeline config declares " +
                                std::to_string(config.channels));
    }
}

template <typename T>
T get_or(const json &obj, const char *key, T fallback) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        return fallback;
    }
    try {
        return it->get<T>();
    } catch (const json::exception &) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

void reject_unknown(const json &obj, std::initializer_list<const char *> known, const std::string &where) {
    if (!obj.is_object()) {
        throw ConfigError("config section '" + where + "' must be an object");
    }
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto &item : obj.items()) {
        if (!allowed.contains(item.key())) {
            throw ConfigError("unknown config key '" + where + "." + item.key() + "'");
        }
    }
}

}  // namespace

void PipelineConfig::validate() const {
    if (image_height == 0 || image_width == 0) {
        throw ConfigError("image: geometry must be positive");
    }
    if (channels != 1 && channels != 3) {
        throw ConfigError("image: only 1 or 3 channels are supported");
    }
    auto wrap = [](const char *section, auto &&check) {
        try {
            check();
        } catch (const ConfigError &e) {
            throw ConfigError(std::string(section) + ": " + e.what());
        }
    };
    wrap("ordinal", [&] {
        if (image_width < ordinal.min_length() || image_height < ordinal.min_length()) {
            throw ConfigError("rows/columns shorter than the embedding span " + std::to_string(ordinal.min_length()));
        }
    });
    wrap("diagonal", [&] { directional().validate(image_height, image_width); });
    wrap("patch", [&] { patch.validate(image_height, image_width, ordinal); });
    wrap("correlation", [&] {
        if (image_height < 2 || image_width < 2) {
            throw ConfigError("needs at least 2 rows and 2 columns");
        }
    });
    wrap("hog", [&] { hog.validate(image_height, image_width); });
    wrap("lbp", [&] {
        lbp.validate();
        if (image_height <= 2 * lbp.radius || image_width <= 2 * lbp.radius) {
            throw ConfigError("radius " + std::to_string(lbp.radius) + " leaves no interior pixels");
        }
    });
}

json to_json(const PipelineConfig &c) {
    return json{
        {"image", {{"height", c.image_height}, {"width", c.image_width}, {"channels", c.channels},
                   {"channel_mode", c.channel_mode == ChannelMode::grayscale ? "grayscale" : "per-channel"}}},
        {"ordinal", {{"dimension", c.ordinal.dimension()}, {"delay", c.ordinal.delay()}}},
        {"diagonal",
         {{"half_range", c.diagonal_half_range},
          {"aggregation", c.diagonal_aggregation == imagefeat::LineAggregation::geometric_mean ? "geometric" : "arithmetic"},
          {"offset_convention", "k>0 above main diagonal; anti-diagonals = diagonals of left-right flipped image"}}},
        {"patch",
         {{"height", c.patch.patch_height}, {"width", c.patch.patch_width}, {"stride", c.patch.stride},
          {"bidirectional", c.patch.bidirectional}, {"flatten", "row-major"}}},
        {"hog",
         {{"cell_height", c.hog.cell_height}, {"cell_width", c.hog.cell_width}, {"bins", c.hog.bins},
          {"block_cells", c.hog.block_cells}, {"epsilon", c.hog.epsilon},
          {"interpolate_orientation", c.hog.interpolate_orientation}}},
        {"lbp", {{"points", c.lbp.points}, {"radius", c.lbp.radius}, {"mode", "uniform"}}},
    };
}

PipelineConfig pipeline_config_from_json(const json &j) {
    reject_unknown(j, {"image", "ordinal", "diagonal", "patch", "hog", "lbp"}, "config");
    PipelineConfig c;
    const json empty = json::object();
    const auto section = [&](const char *name) -> const json & {
        const auto it = j.find(name);
        return it == j.end() ? empty : *it;
    };

    const auto &image = section("image");
    reject_unknown(image, {"height", "width", "channels", "channel_mode"}, "image");
    c.image_height = get_or<std::size_t>(image, "height", c.image_height);
    c.image_width = get_or<std::size_t>(image, "width", c.image_width);
    c.channels = get_or<std::size_t>(image, "channels", c.channels);
    const auto mode = get_or<std::string>(image, "channel_mode", "grayscale");
    if (mode == "grayscale") {
        c.channel_mode = ChannelMode::grayscale;
    } else if (mode == "per-channel") {
        c.channel_mode = ChannelMode::per_channel;
    } else {
        throw ConfigError("image.channel_mode must be 'grayscale' or 'per-channel'");
    }

    const auto &ord = section("ordinal");
    reject_unknown(ord, {"dimension", "delay"}, "ordinal");
    c.ordinal = ordinal::OrdinalConfig(get_or<std::size_t>(ord, "dimension", 3), get_or<std::size_t>(ord, "delay", 1));

    const auto &diag = section("diagonal");
    reject_unknown(diag, {"half_range", "aggregation", "offset_convention"}, "diagonal");
    c.diagonal_half_range = get_or<std::size_t>(diag, "half_range", c.diagonal_half_range);
    const auto aggregation = get_or<std::string>(diag, "aggregation", "geometric");
    if (aggregation == "geometric") {
        c.diagonal_aggregation = imagefeat::LineAggregation::geometric_mean;
    } else if (aggregation == "arithmetic") {
        c.diagonal_aggregation = imagefeat::LineAggregation::arithmetic_mean;
    } else {
        throw ConfigError("diagonal.aggregation must be 'geometric' or 'arithmetic'");
    }

    const auto &patch = section("patch");
    reject_unknown(patch, {"height", "width", "stride", "bidirectional", "flatten"}, "patch");
    c.patch.patch_height = get_or<std::size_t>(patch, "height", c.patch.patch_height);
    c.patch.patch_width = get_or<std::size_t>(patch, "width", c.patch.patch_width);
    c.patch.stride = get_or<std::size_t>(patch, "stride", c.patch.stride);
    c.patch.bidirectional = get_or<bool>(patch, "bidirectional", c.patch.bidirectional);
    if (get_or<std::string>(patch, "flatten", "row-major") != "row-major") {
        throw ConfigError("patch.flatten: only 'row-major' is supported");
    }

    const auto &hog = section("hog");
    reject_unknown(hog, {"cell_height", "cell_width", "bins", "block_cells", "epsilon", "interpolate_orientation"}, "hog");
    c.hog.cell_height = get_or<std::size_t>(hog, "cell_height", c.hog.cell_height);
    c.hog.cell_width = get_or<std::size_t>(hog, "cell_width", c.hog.cell_width);
    c.hog.bins = get_or<std::size_t>(hog, "bins", c.hog.bins);
    c.hog.block_cells = get_or<std::size_t>(hog, "block_cells", c.hog.block_cells);
    c.hog.epsilon = get_or<double>(hog, "epsilon", c.hog.epsilon);
    c.hog.interpolate_orientation = get_or<bool>(hog, "interpolate_orientation", c.hog.interpolate_orientation);

    const auto &lbp = section("lbp");
    reject_unknown(lbp, {"points", "radius", "mode"}, "lbp");
    c.lbp.points = get_or<std::size_t>(lbp, "points", c.lbp.points);
    c.lbp.radius = get_or<std::size_t>(lbp, "radius", c.lbp.radius);
    if (get_or<std::string>(lbp, "mode", "uniform") != "uniform") {
        throw ConfigError("lbp.mode: only 'uniform' is supported");
    }

    c.validate();
    return c;
}

PipelineConfig load_pipeline_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception &e) {
        throw ConfigError(path + ": " + e.what());
    }
    return pipeline_config_from_json(j);
}

std::string fingerprint(const PipelineConfig &config) { return sha256_hex(to_json(config).dump()).substr(0, 16); }

const Segment &FeatureManifest::segment(const std::string &name) const {
    for (const auto &s : segments) {
        if (s.name == name) {
            return s;
        }
    }
    throw InvalidArgument("manifest has no segment named '" + name + "'");
}

json FeatureManifest::to_json() const {
    json segs = json::array();
    for (const auto &s : segments) {
        segs.push_back({{"name", s.name}, {"offset", s.offset}, {"length", s.length}});
    }
    return {{"segments", segs}, {"total_dim", total_dim}, {"fingerprint", fingerprint}, {"config", config},
            {"metadata", metadata}};
}

FeatureManifest FeatureManifest::from_json(const json &j) {
    FeatureManifest m;
    try {
        for (const auto &s : j.at("segments")) {
            m.segments.push_back({s.at("name").get<std::string>(), s.at("offset").get<std::size_t>(),
                                  s.at("length").get<std::size_t>()});
        }
        m.total_dim = j.at("total_dim").get<std::size_t>();
        m.fingerprint = j.at("fingerprint").get<std::string>();
        m.config = j.value("config", json::object());
        m.metadata = j.value("metadata", json::object());
    } catch (const json::exception &e) {
        throw FormatError(FormatError::Kind::bad_header, std::string("malformed feature manifest: ") + e.what());
    }
    std::size_t expected = 0;
    for (const auto &s : m.segments) {
        if (s.offset != expected) {
            throw FormatError(FormatError::Kind::bad_header, "manifest segments are not contiguous at '" + s.name + "'");
        }
        expected += s.length;
    }
    if (expected != m.total_dim) {
        throw FormatError(FormatError::Kind::bad_header, "manifest segments do not cover total_dim");
    }
    return m;
}

FeatureManifest build_manifest(const PipelineConfig &config) {
    config.validate();
    const std::size_t h = config.image_height;
    const std::size_t w = config.image_width;
    const std::pair<const char *, std::size_t> plane[] = {
        {"row_pe", h},
        {"col_pe", w},
        {"diag_pe", config.directional().line_count()},
        {"antidiag_pe", config.directional().line_count()},
        {"patch_pe", config.patch.patch_count(h, w)},
        {"row_corr", h - 1},
        {"col_corr", w - 1},
        {"hog", config.hog.feature_count(h, w)},
        {"lbp", config.lbp.bin_count()},
    };
    const std::size_t blocks = config.channel_mode == ChannelMode::per_channel ? config.channels : 1;

    FeatureManifest m;
    for (std::size_t ch = 0; ch < blocks; ++ch) {
        const char *suffix = blocks > 1 ? channel_suffix(ch, blocks) : nullptr;
        for (const auto &[name, len] : plane) {
            std::string full = name;
            if (suffix != nullptr) {
                full += std::string(".") + suffix;
            }
            m.segments.push_back({full, m.total_dim, len});
            m.total_dim += len;
        }
    }
    m.config = to_json(config);
    m.fingerprint = fingerprint(config);
    return m;
}

std::vector<double> extract_plane(const GrayImage &plane, const PipelineConfig &config) {
    const auto directional = config.directional();
    std::vector<double> out;
    out.reserve(plane_feature_count(config));
    const auto append = [&out](const std::vector<double> &v) { out.insert(out.end(), v.begin(), v.end()); };
    append(imagefeat::row_pe(plane, config.ordinal));
    append(imagefeat::col_pe(plane, config.ordinal));
    append(imagefeat::diag_pe(plane, directional));
    append(imagefeat::antidiag_pe(plane, directional));
    append(imagefeat::patch_pe(plane, config.patch, config.ordinal));
    append(imagefeat::adjacent_row_corr(plane));
    append(imagefeat::adjacent_col_corr(plane));
    append(descriptors::hog(plane, config.hog));
    append(descriptors::lbp_histogram(plane, config.lbp));
    return out;
}

std::vector<double> extract_features(const MultiChannelImage &image, const PipelineConfig &config) {
    check_geometry(image.height(), image.width(), image.channel_count(), config);
    if (config.channel_mode == ChannelMode::grayscale) {
        return extract_plane(image.to_gray(), config);
    }
    std::vector<double> out;
    for (const auto &ch : image.channels()) {
        const auto block = extract_plane(ch, config);
        out.insert(out.end(), block.begin(), block.end());
    }
    return out;
}

std::vector<double> extract_features(const GrayImage &image, const PipelineConfig &config) {
    check_geometry(image.height(), image.width(), 1, config);
    return extract_plane(image, config);
}

Extraction extract(const MultiChannelImage &image, const PipelineConfig &config) {
    auto manifest = build_manifest(config);
    return {extract_features(image, config), std::move(manifest)};
}

Extraction extract(const GrayImage &image, const PipelineConfig &config) {
    auto manifest = build_manifest(config);
    return {extract_features(image, config), std::move(manifest)};
}

FeatureBatch extract_batch(std::span<const MultiChannelImage> images, const PipelineConfig &config, unsigned threads) {
    FeatureBatch batch{Matrix(), build_manifest(config)};
    for (std::size_t i = 0; i < images.size(); ++i) {
        try {
            check_geometry(images[i].height(), images[i].width(), images[i].channel_count(), config);
        } catch (const DimensionMismatch &e) {
            throw DimensionMismatch("image " + std::to_string(i) + ": " + e.what());
        }
    }
    batch.features.resize(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(batch.manifest.total_dim));
    parallel_for(images.size(), threads, [&](std::size_t i) {
        const auto row = extract_features(images[i], config);
        for (std::size_t c = 0; c < row.size(); ++c) {
            batch.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
        }
    });
    return batch;
}

}  // namespace pefusion::fusion
