#pragma once

// Assembly of the fused per-image feature vector and its segment manifest.

#include "pefusion/descriptors.hpp"
#include "pefusion/image.hpp"
#include "pefusion/imagefeat.hpp"
#include "pefusion/matrix.hpp"
#include "pefusion/ordinal.hpp"

#include <json.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pefusion::fusion {

enum class ChannelMode { grayscale, per_channel };

/// Everything that determines the feature layout, including the declared input geometry.
struct PipelineConfig {
    std::size_t image_height = 28;
    std::size_t image_width = 28;
    std::size_t channels = 1;
    ChannelMode channel_mode = ChannelMode::grayscale;

    ordinal::OrdinalConfig ordinal{3, 1};
    std::size_t diagonal_half_range = 10;
    imagefeat::LineAggregation diagonal_aggregation = imagefeat::LineAggregation::geometric_mean;
    imagefeat::PatchConfig patch{};
    descriptors::HogConfig hog{};
    descriptors::LbpConfig lbp{};

    [[nodiscard]] imagefeat::DirectionalConfig directional() const {
        return {diagonal_half_range, ordinal, diagonal_aggregation};
    }
    /// Throws ConfigError naming the sub-config that does not fit the declared geometry.
    void validate() const;

    friend bool operator==(const PipelineConfig &, const PipelineConfig &) = default;
};

[[nodiscard]] nlohmann::json to_json(const PipelineConfig &config);
/// Strict parse: unknown keys and invalid values raise ConfigError. Missing keys keep their defaults.
[[nodiscard]] PipelineConfig pipeline_config_from_json(const nlohmann::json &j);
[[nodiscard]] PipelineConfig load_pipeline_config(const std::string &path);

/// Stable 16-hex-digit hash of the canonical JSON form of the config.
[[nodiscard]] std::string fingerprint(const PipelineConfig &config);

struct Segment {
    std::string name;
    std::size_t offset = 0;
    std::size_t length = 0;

    friend bool operator==(const Segment &, const Segment &) = default;
};

struct FeatureManifest {
    std::vector<Segment> segments;
    std::size_t total_dim = 0;
    std::string fingerprint;
    /// Canonical config the layout was derived from.
    nlohmann::json config;
    /// Free-form provenance (dataset, split, ...). Not part of the fingerprint.
    nlohmann::json metadata = nlohmann::json::object();

    [[nodiscard]] const Segment &segment(const std::string &name) const;
    [[nodiscard]] nlohmann::json to_json() const;
    static FeatureManifest from_json(const nlohmann::json &j);

    friend bool operator==(const FeatureManifest &, const FeatureManifest &) = default;
};

/// Layout of the vector produced by extract() for this config, one segment block per channel block.
[[nodiscard]] FeatureManifest build_manifest(const PipelineConfig &config);

/// Features of one grayscale plane in segment order, without geometry checks against the config.
[[nodiscard]] std::vector<double> extract_plane(const GrayImage &plane, const PipelineConfig &config);

[[nodiscard]] std::vector<double> extract_features(const MultiChannelImage &image, const PipelineConfig &config);
[[nodiscard]] std::vector<double> extract_features(const GrayImage &image, const PipelineConfig &config);

struct Extraction {
    std::vector<double> features;
    FeatureManifest manifest;
};

[[nodiscard]] Extraction extract(const MultiChannelImage &image, const PipelineConfig &config);
[[nodiscard]] Extraction extract(const GrayImage &image, const PipelineConfig &config);

struct FeatureBatch {
    Matrix features;
    FeatureManifest manifest;
};

/// Row i holds the features of images[i]. Geometry is checked for every image before any work starts.
[[nodiscard]] FeatureBatch extract_batch(std::span<const MultiChannelImage> images, const PipelineConfig &config,
                                         unsigned threads = 1);

}  // namespace pefusion::fusion
