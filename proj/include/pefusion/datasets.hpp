#pragma once

// Readers for the IDX (MNIST family) and CIFAR-10 binary distributions.

#include "pefusion/image.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pefusion::datasets {

using Label = std::uint32_t;

struct LabeledImageSet {
    std::vector<MultiChannelImage> images;
    std::vector<Label> labels;
    std::vector<std::string> class_names;
    std::size_t class_count = 0;

    [[nodiscard]] std::size_t size() const noexcept { return images.size(); }
    /// Checks equal lengths, label range and homogeneous geometry.
    void validate() const;
};

struct IdxOptions {
    /// Subtracted from every stored label (EMNIST Letters stores 1..26).
    Label label_offset = 0;
    /// Transpose every image (EMNIST stores images column-major relative to MNIST).
    bool transpose = false;
    /// 0 infers max(label) + 1.
    std::size_t class_count = 0;
};

/// Reads an image/label IDX pair; either file may be gzip-compressed.
[[nodiscard]] LabeledImageSet load_idx(const std::filesystem::path &images_path,
                                       const std::filesystem::path &labels_path, const IdxOptions &options = {});

/// Decodes a raw (uncompressed) IDX label file.
[[nodiscard]] std::vector<Label> decode_idx_labels(std::string_view bytes, const std::string &source = "<memory>");
[[nodiscard]] std::vector<Label> load_idx_labels(const std::filesystem::path &path);

/// Concatenates CIFAR-10 binary batches (3073-byte records: label, R, G, B planes).
[[nodiscard]] LabeledImageSet load_cifar10(const std::vector<std::filesystem::path> &batch_paths);
[[nodiscard]] LabeledImageSet decode_cifar10(std::string_view bytes, const std::string &source = "<memory>");

/// Writers used for fixtures and label sidecars. Pixels are quantised as round(255 * v).
void write_idx_images(const std::filesystem::path &path, const LabeledImageSet &set);
void write_idx_labels(const std::filesystem::path &path, const std::vector<Label> &labels);
[[nodiscard]] std::string encode_idx_images(const LabeledImageSet &set);
[[nodiscard]] std::string encode_idx_labels(const std::vector<Label> &labels);

/// Indices of a class-balanced sample: n_per_class per class, deterministic in seed, ascending.
[[nodiscard]] std::vector<std::size_t> subsample_indices(const LabeledImageSet &set, std::size_t n_per_class,
                                                         std::uint64_t seed);
[[nodiscard]] LabeledImageSet subsample(const LabeledImageSet &set, std::size_t n_per_class, std::uint64_t seed);
[[nodiscard]] LabeledImageSet select(const LabeledImageSet &set, const std::vector<std::size_t> &indices);

enum class FileFormat { idx, cifar10 };

struct DatasetProfile {
    std::string name;
    FileFormat format = FileFormat::idx;
    std::size_t height = 28;
    std::size_t width = 28;
    std::size_t channels = 1;
    std::size_t class_count = 10;
    Label label_offset = 0;
    bool transpose = false;
    std::vector<std::string> class_names;

    [[nodiscard]] IdxOptions idx_options() const { return {label_offset, transpose, class_count}; }
};

/// fashion-mnist, kmnist, emnist-letters, cifar10.
[[nodiscard]] const std::vector<DatasetProfile> &profiles();
[[nodiscard]] const DatasetProfile &find_profile(std::string_view name);

}  // namespace pefusion::datasets
