#pragma once

// Histogram of oriented gradients and uniform local binary pattern descriptors.

#include "pefusion/image.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pefusion::descriptors {

struct HogConfig {
    std::size_t cell_height = 4;
    std::size_t cell_width = 4;
    std::size_t bins = 9;
    /// Cells per block side; blocks slide by one cell.
    std::size_t block_cells = 1;
    double epsilon = 1e-5;
    /// Split each vote linearly between the two nearest bin centres instead of hard binning.
    bool interpolate_orientation = false;

    void validate(std::size_t height, std::size_t width) const;
    [[nodiscard]] std::size_t feature_count(std::size_t height, std::size_t width) const noexcept;

    friend bool operator==(const HogConfig &, const HogConfig &) = default;
};

struct LbpConfig {
    std::size_t points = 16;
    std::size_t radius = 2;

    void validate() const;
    /// P + 2 for the uniform-pattern histogram.
    [[nodiscard]] std::size_t bin_count() const noexcept { return points + 2; }

    friend bool operator==(const LbpConfig &, const LbpConfig &) = default;
};

/// Central-difference gradients with replicated borders, row-major H*W.
struct GradientField {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> gx;
    std::vector<double> gy;
};

[[nodiscard]] GradientField gradients(const GrayImage &image);

/// Unnormalised per-cell orientation histograms (cells row-major, bins innermost).
[[nodiscard]] std::vector<double> cell_histograms(const GrayImage &image, const HogConfig &config);

/// Block-normalised HOG descriptor.
[[nodiscard]] std::vector<double> hog(const GrayImage &image, const HogConfig &config);

/// LBP code of pixel (x = column, y = row). The pixel must be at least R away from every border.
[[nodiscard]] std::uint32_t lbp_code(const GrayImage &image, std::size_t x, std::size_t y, const LbpConfig &config);

/// Number of 0/1 transitions around the circular P-bit code.
[[nodiscard]] std::size_t circular_transitions(std::uint32_t code, std::size_t points) noexcept;
[[nodiscard]] bool is_uniform(std::uint32_t code, std::size_t points) noexcept;
/// Popcount for uniform codes, P + 1 for all others.
[[nodiscard]] std::size_t uniform_bin(std::uint32_t code, std::size_t points) noexcept;

/// Uniform-pattern histogram over interior pixels, normalised to sum 1.
[[nodiscard]] std::vector<double> lbp_histogram(const GrayImage &image, const LbpConfig &config);

}  // namespace pefusion::descriptors
