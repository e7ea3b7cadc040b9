#pragma once

// Entropy and correlation features along rows, columns, diagonals,
// anti-diagonals and local patches of a grayscale image.

#include "pefusion/image.hpp"
#include "pefusion/ordinal.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace pefusion::imagefeat {

/// How the forward and reversed PE of one line are combined into a feature.
enum class LineAggregation { geometric_mean, arithmetic_mean };

struct DirectionalConfig {
    /// Diagonals with offsets -K..K are used (2K+1 lines).
    std::size_t half_range = 10;
    ordinal::OrdinalConfig ordinal{};
    LineAggregation aggregation = LineAggregation::geometric_mean;

    [[nodiscard]] std::size_t line_count() const noexcept { return 2 * half_range + 1; }
    /// Every diagonal must be at least ordinal.min_length() long: min(H,W) - K >= (d-1)tau + 1.
    void validate(std::size_t height, std::size_t width) const;

    friend bool operator==(const DirectionalConfig &, const DirectionalConfig &) = default;
};

struct PatchConfig {
    std::size_t patch_height = 4;
    std::size_t patch_width = 4;
    std::size_t stride = 2;
    /// Forward-only PE per patch unless set.
    bool bidirectional = false;

    [[nodiscard]] std::size_t count_along(std::size_t extent, std::size_t patch) const noexcept {
        return (extent - patch) / stride + 1;
    }
    [[nodiscard]] std::size_t patch_count(std::size_t height, std::size_t width) const noexcept {
        return count_along(height, patch_height) * count_along(width, patch_width);
    }
    void validate(std::size_t height, std::size_t width, const ordinal::OrdinalConfig &ordinal) const;

    friend bool operator==(const PatchConfig &, const PatchConfig &) = default;
};

/// Bidirectional PE of every row, top to bottom.
[[nodiscard]] std::vector<double> row_pe(const GrayImage &image, const ordinal::OrdinalConfig &ordinal);
/// Bidirectional PE of every column, left to right.
[[nodiscard]] std::vector<double> col_pe(const GrayImage &image, const ordinal::OrdinalConfig &ordinal);

/// Pixels of the top-left to bottom-right line {(p, p+k)}, read top to bottom.
/// Positive k lies above/right of the main diagonal.
[[nodiscard]] std::vector<double> diagonal(const GrayImage &image, std::ptrdiff_t offset);

/// One feature per offset k = -K..K (ascending).
[[nodiscard]] std::vector<double> diag_pe(const GrayImage &image, const DirectionalConfig &config);
/// Diagonal features of the horizontally flipped image.
[[nodiscard]] std::vector<double> antidiag_pe(const GrayImage &image, const DirectionalConfig &config);

/// Row-major flattened patch anchored at (row, col).
[[nodiscard]] std::vector<double> patch(const GrayImage &image, std::size_t row, std::size_t col, std::size_t height,
                                        std::size_t width);

/// PE of each patch, anchors enumerated row-major with the configured stride.
[[nodiscard]] std::vector<double> patch_pe(const GrayImage &image, const PatchConfig &config,
                                           const ordinal::OrdinalConfig &ordinal);

/// Pearson correlation, clamped to [-1, 1]. Zero-variance input yields 0.
[[nodiscard]] double pearson(std::span<const double> a, std::span<const double> b);

/// pearson(row_i, row_{i+1}) for i = 0..H-2.
[[nodiscard]] std::vector<double> adjacent_row_corr(const GrayImage &image);
/// pearson(col_j, col_{j+1}) for j = 0..W-2.
[[nodiscard]] std::vector<double> adjacent_col_corr(const GrayImage &image);

}  // namespace pefusion::imagefeat
