#include "pefusion/descriptors.hpp"

#include "pefusion/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

namespace pefusion::descriptors {

namespace {

struct Sample {
    double dy;
    double dx;
};

std::vector<Sample> circle_samples(const LbpConfig &config) {
    std::vector<Sample> out(config.points);
    const auto radius = static_cast<double>(config.radius);
    for (std::size_t p = 0; p < config.points; ++p) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(p) / static_cast<double>(config.points);
        double dx = radius * std::cos(angle);
        double dy = -radius * std::sin(angle);
        // Snap near-integer offsets onto the grid.
        if (std::abs(dx - std::round(dx)) < 1e-9) {
            dx = std::round(dx);
        }
        if (std::abs(dy - std::round(dy)) < 1e-9) {
            dy = std::round(dy);
        }
        out[p] = {dy, dx};
    }
    return out;
}

// Bilinear interpolation in lerp form.
double bilinear(const GrayImage &image, double y, double x) {
    const double fy0 = std::floor(y);
    const double fx0 = std::floor(x);
    const auto y0 = static_cast<std::size_t>(fy0);
    const auto x0 = static_cast<std::size_t>(fx0);
    const double ty = y - fy0;
    const double tx = x - fx0;
    const std::size_t y1 = ty > 0.0 ? y0 + 1 : y0;
    const std::size_t x1 = tx > 0.0 ? x0 + 1 : x0;
    const double top = image(y0, x0) + tx * (image(y0, x1) - image(y0, x0));
    const double bottom = image(y1, x0) + tx * (image(y1, x1) - image(y1, x0));
    return top + ty * (bottom - top);
}

std::uint32_t code_at(const GrayImage &image, std::size_t x, std::size_t y, const std::vector<Sample> &samples) {
    const double center = image(y, x);
    std::uint32_t code = 0;
    for (std::size_t p = 0; p < samples.size(); ++p) {
        const double value =
            bilinear(image, static_cast<double>(y) + samples[p].dy, static_cast<double>(x) + samples[p].dx);
        if (value - center >= 0.0) {
            code |= std::uint32_t{1} << p;
        }
    }
    return code;
}

}  // namespace

void HogConfig::validate(std::size_t height, std::size_t width) const {
    if (cell_height == 0 || cell_width == 0) {
        throw ConfigError("HOG cell size must be positive");
    }
    if (bins < 2) {
        throw ConfigError("HOG needs at least 2 orientation bins");
    }
    if (block_cells < 1) {
        throw ConfigError("HOG block must span at least one cell");
    }
    if (!(epsilon > 0.0)) {
        throw ConfigError("HOG epsilon must be positive");
    }
    if (height < 3 || width < 3) {
        throw ConfigError("HOG needs an image of at least 3x3");
    }
    if (height % cell_height != 0 || width % cell_width != 0) {
        throw ConfigError("image " + std::to_string(height) + "x" + std::to_string(width) +
                          " is not divisible into " + std::to_string(cell_height) + "x" + std::to_string(cell_width) +
                          " cells; crop or pad explicitly");
    }
    if (height / cell_height < block_cells || width / cell_width < block_cells) {
        throw ConfigError("HOG block larger than the cell grid");
    }
}

std::size_t HogConfig::feature_count(std::size_t height, std::size_t width) const noexcept {
    const std::size_t cy = height / cell_height;
    const std::size_t cx = width / cell_width;
    return (cy - block_cells + 1) * (cx - block_cells + 1) * block_cells * block_cells * bins;
}

void LbpConfig::validate() const {
    if (points < 4 || points > 32) {
        throw ConfigError("LBP neighbour count must lie in [4, 32], got " + std::to_string(points));
    }
    if (radius < 1) {
        throw ConfigError("LBP radius must be >= 1");
    }
}

GradientField gradients(const GrayImage &image) {
    const std::size_t h = image.height();
    const std::size_t w = image.width();
    if (h < 3 || w < 3) {
        throw DimensionMismatch("gradients need an image of at least 3x3");
    }
    GradientField g{h, w, std::vector<double>(h * w), std::vector<double>(h * w)};
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t xl = x == 0 ? 0 : x - 1;
            const std::size_t xr = x + 1 == w ? x : x + 1;
            const std::size_t yu = y == 0 ? 0 : y - 1;
            const std::size_t yd = y + 1 == h ? y : y + 1;
            g.gx[y * w + x] = image(y, xr) - image(y, xl);
            g.gy[y * w + x] = image(yd, x) - image(yu, x);
        }
    }
    return g;
}

std::vector<double> cell_histograms(const GrayImage &image, const HogConfig &config) {
    config.validate(image.height(), image.width());
    const auto g = gradients(image);
    const std::size_t cells_x = image.width() / config.cell_width;
    const std::size_t cells_y = image.height() / config.cell_height;
    const double bin_width = 180.0 / static_cast<double>(config.bins);
    std::vector<double> hist(cells_x * cells_y * config.bins, 0.0);

    for (std::size_t y = 0; y < g.height; ++y) {
        for (std::size_t x = 0; x < g.width; ++x) {
            const double gx = g.gx[y * g.width + x];
            const double gy = g.gy[y * g.width + x];
            const double magnitude = std::hypot(gx, gy);
            if (magnitude == 0.0) {
                continue;
            }
            double theta = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
            // Unsigned orientation in [0, 180).
            if (theta < 0.0) {
                theta += 180.0;
            }
            if (theta >= 180.0) {
                theta -= 180.0;
            }
            double *cell = &hist[((y / config.cell_height) * cells_x + x / config.cell_width) * config.bins];
            if (!config.interpolate_orientation) {
                const auto bin = std::min(config.bins - 1, static_cast<std::size_t>(theta / bin_width));
                cell[bin] += magnitude;
            } else {
                const double pos = theta / bin_width - 0.5;
                const double lower = std::floor(pos);
                const double frac = pos - lower;
                const auto n = static_cast<long>(config.bins);
                const auto b0 = static_cast<std::size_t>(((static_cast<long>(lower) % n) + n) % n);
                const std::size_t b1 = (b0 + 1) % config.bins;
                cell[b0] += (1.0 - frac) * magnitude;
                cell[b1] += frac * magnitude;
            }
        }
    }
    return hist;
}

std::vector<double> hog(const GrayImage &image, const HogConfig &config) {
    const auto hist = cell_histograms(image, config);
    const std::size_t cells_x = image.width() / config.cell_width;
    const std::size_t cells_y = image.height() / config.cell_height;
    const std::size_t blocks_x = cells_x - config.block_cells + 1;
    const std::size_t blocks_y = cells_y - config.block_cells + 1;
    const std::size_t block_len = config.block_cells * config.block_cells * config.bins;
    const double eps2 = config.epsilon * config.epsilon;

    std::vector<double> out;
    out.reserve(blocks_x * blocks_y * block_len);
    std::vector<double> block(block_len);
    for (std::size_t by = 0; by < blocks_y; ++by) {
        for (std::size_t bx = 0; bx < blocks_x; ++bx) {
            std::size_t k = 0;
            for (std::size_t cy = by; cy < by + config.block_cells; ++cy) {
                for (std::size_t cx = bx; cx < bx + config.block_cells; ++cx) {
                    const double *cell = &hist[(cy * cells_x + cx) * config.bins];
                    for (std::size_t b = 0; b < config.bins; ++b) {
                        block[k++] = cell[b];
                    }
                }
            }
            double sq = 0.0;
            for (const double v : block) {
                sq += v * v;
            }
            const double scale = 1.0 / std::sqrt(sq + eps2);
            for (const double v : block) {
                out.push_back(v * scale);
            }
        }
    }
    return out;
}

std::uint32_t lbp_code(const GrayImage &image, std::size_t x, std::size_t y, const LbpConfig &config) {
    config.validate();
    const std::size_t r = config.radius;
    if (x < r || y < r || x + r >= image.width() || y + r >= image.height()) {
        throw DomainError("pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") lies within radius " +
                          std::to_string(r) + " of the image border");
    }
    return code_at(image, x, y, circle_samples(config));
}

std::size_t circular_transitions(std::uint32_t code, std::size_t points) noexcept {
    const std::uint32_t mask = points >= 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << points) - 1;
    code &= mask;
    const std::uint32_t rotated = ((code >> 1) | (code << (points - 1))) & mask;
    return static_cast<std::size_t>(std::popcount(code ^ rotated));
}

bool is_uniform(std::uint32_t code, std::size_t points) noexcept { return circular_transitions(code, points) <= 2; }

std::size_t uniform_bin(std::uint32_t code, std::size_t points) noexcept {
    return is_uniform(code, points) ? static_cast<std::size_t>(std::popcount(code)) : points + 1;
}

std::vector<double> lbp_histogram(const GrayImage &image, const LbpConfig &config) {
    config.validate();
    const std::size_t r = config.radius;
    if (image.width() <= 2 * r || image.height() <= 2 * r) {
        throw DimensionMismatch("image " + std::to_string(image.height()) + "x" + std::to_string(image.width()) +
                                " has no interior pixels for LBP radius " + std::to_string(r));
    }
    const auto samples = circle_samples(config);
    std::vector<double> hist(config.bin_count(), 0.0);
    std::size_t n = 0;
    for (std::size_t y = r; y + r < image.height(); ++y) {
        for (std::size_t x = r; x + r < image.width(); ++x) {
            hist[uniform_bin(code_at(image, x, y, samples), config.points)] += 1.0;
            ++n;
        }
    }
    for (double &v : hist) {
        v /= static_cast<double>(n);
    }
    return hist;
}

}  // namespace pefusion::descriptors
