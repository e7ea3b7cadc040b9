#include "pefusion/image.hpp"

#include "pefusion/error.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace pefusion {

GrayImage::GrayImage(std::size_t height, std::size_t width, double fill)
    : GrayImage(height, width, std::vector<double>(height * width, fill)) {}

GrayImage::GrayImage(std::size_t height, std::size_t width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
    if (height_ == 0 || width_ == 0) {
        throw DimensionMismatch("image dimensions must be positive");
    }
    if (pixels_.size() != height_ * width_) {
        throw DimensionMismatch("pixel buffer holds " + std::to_string(pixels_.size()) + " values, expected " +
                                std::to_string(height_ * width_));
    }
    for (const double v : pixels_) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("image intensities must be finite");
        }
    }
}

std::vector<double> GrayImage::column(std::size_t c) const {
    std::vector<double> out(height_);
    for (std::size_t r = 0; r < height_; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

GrayImage GrayImage::transposed() const {
    std::vector<double> out(pixels_.size());
    for (std::size_t r = 0; r < height_; ++r) {
        for (std::size_t c = 0; c < width_; ++c) {
            out[c * height_ + r] = (*this)(r, c);
        }
    }
    return GrayImage(width_, height_, std::move(out));
}

GrayImage GrayImage::flipped_lr() const {
    std::vector<double> out(pixels_.size());
    for (std::size_t r = 0; r < height_; ++r) {
        for (std::size_t c = 0; c < width_; ++c) {
            out[r * width_ + (width_ - 1 - c)] = (*this)(r, c);
        }
    }
    return GrayImage(height_, width_, std::move(out));
}

MultiChannelImage::MultiChannelImage(std::vector<GrayImage> channels) : channels_(std::move(channels)) {
    if (channels_.empty()) {
        throw DimensionMismatch("a multi-channel image needs at least one channel");
    }
    for (const auto &ch : channels_) {
        if (ch.height() != channels_.front().height() || ch.width() != channels_.front().width()) {
            throw DimensionMismatch("all channels must share the same geometry");
        }
    }
}

GrayImage MultiChannelImage::to_gray() const {
    if (channels_.size() == 1) {
        return channels_.front();
    }
    if (channels_.size() != 3) {
        throw DimensionMismatch("grayscale conversion expects 1 or 3 channels, got " + std::to_string(channels_.size()));
    }
    const auto n = height() * width();
    std::vector<double> out(n);
    const auto r = channels_[0].pixels();
    const auto g = channels_[1].pixels();
    const auto b = channels_[2].pixels();
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    }
    return GrayImage(height(), width(), std::move(out));
}

}  // namespace pefusion
