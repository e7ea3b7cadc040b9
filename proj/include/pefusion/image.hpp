#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pefusion {

/// Dense single-channel image, row-major, double intensities (normally in [0,1]).
class GrayImage {
  public:
    GrayImage() = default;
    GrayImage(std::size_t height, std::size_t width, double fill = 0.0);
    GrayImage(std::size_t height, std::size_t width, std::vector<double> pixels);

    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] bool empty() const noexcept { return pixels_.empty(); }

    [[nodiscard]] double operator()(std::size_t row, std::size_t col) const noexcept { return pixels_[row * width_ + col]; }
    [[nodiscard]] double &operator()(std::size_t row, std::size_t col) noexcept { return pixels_[row * width_ + col]; }

    [[nodiscard]] std::span<const double> pixels() const noexcept { return pixels_; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept { return {pixels_.data() + r * width_, width_}; }
    [[nodiscard]] std::vector<double> column(std::size_t c) const;

    [[nodiscard]] GrayImage transposed() const;
    [[nodiscard]] GrayImage flipped_lr() const;

    friend bool operator==(const GrayImage &, const GrayImage &) = default;

  private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> pixels_;
};

/// Per-channel planes of equal geometry (R, G, B order for colour data).
class MultiChannelImage {
  public:
    MultiChannelImage() = default;
    explicit MultiChannelImage(std::vector<GrayImage> channels);

    [[nodiscard]] std::size_t height() const noexcept { return channels_.empty() ? 0 : channels_.front().height(); }
    [[nodiscard]] std::size_t width() const noexcept { return channels_.empty() ? 0 : channels_.front().width(); }
    [[nodiscard]] std::size_t channel_count() const noexcept { return channels_.size(); }
    [[nodiscard]] const GrayImage &channel(std::size_t c) const { return channels_.at(c); }
    [[nodiscard]] const std::vector<GrayImage> &channels() const noexcept { return channels_; }

    /// ITU-R BT.601 luma; a single-channel image is returned unchanged.
    [[nodiscard]] GrayImage to_gray() const;

    friend bool operator==(const MultiChannelImage &, const MultiChannelImage &) = default;

  private:
    std::vector<GrayImage> channels_;
};

}  // namespace pefusion
