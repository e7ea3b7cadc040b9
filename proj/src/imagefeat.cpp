#include "pefusion/imagefeat.hpp"

#include "pefusion/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pefusion::imagefeat {

namespace {

double combine(std::span<const double> line, const ordinal::OrdinalConfig &ordinal, LineAggregation aggregation) {
    if (aggregation == LineAggregation::geometric_mean) {
        return ordinal::bidirectional_pe(line, ordinal);
    }
    const double forward = ordinal::permutation_entropy(line, ordinal).normalized;
    const double backward = ordinal::reverse_permutation_entropy(line, ordinal);
    return 0.5 * (forward + backward);
}

}  // namespace

void DirectionalConfig::validate(std::size_t height, std::size_t width) const {
    const std::size_t shortest_side = std::min(height, width);
    if (half_range >= shortest_side || shortest_side - half_range < ordinal.min_length()) {
        throw ConfigError("diagonal half-range K=" + std::to_string(half_range) + " leaves diagonals shorter than " +
                          std::to_string(ordinal.min_length()) + " on a " + std::to_string(height) + "x" +
                          std::to_string(width) + " image");
    }
}

void PatchConfig::validate(std::size_t height, std::size_t width, const ordinal::OrdinalConfig &ordinal) const {
    if (stride < 1) {
        throw ConfigError("patch stride must be >= 1");
    }
    if (patch_height < 1 || patch_width < 1 || patch_height > height || patch_width > width) {
        throw ConfigError("patch " + std::to_string(patch_height) + "x" + std::to_string(patch_width) +
                          " does not fit a " + std::to_string(height) + "x" + std::to_string(width) + " image");
    }
    if (patch_height * patch_width < ordinal.min_length()) {
        throw ConfigError("patch holds " + std::to_string(patch_height * patch_width) + " pixels; PE needs at least " +
                          std::to_string(ordinal.min_length()));
    }
}

std::vector<double> row_pe(const GrayImage &image, const ordinal::OrdinalConfig &ordinal) {
    if (image.width() < ordinal.min_length()) {
        throw InsufficientLength(image.width(), ordinal.min_length());
    }
    std::vector<double> out(image.height());
    for (std::size_t r = 0; r < image.height(); ++r) {
        out[r] = ordinal::bidirectional_pe(image.row(r), ordinal);
    }
    return out;
}

std::vector<double> col_pe(const GrayImage &image, const ordinal::OrdinalConfig &ordinal) {
    if (image.height() < ordinal.min_length()) {
        throw InsufficientLength(image.height(), ordinal.min_length());
    }
    std::vector<double> out(image.width());
    for (std::size_t c = 0; c < image.width(); ++c) {
        out[c] = ordinal::bidirectional_pe(image.column(c), ordinal);
    }
    return out;
}

std::vector<double> diagonal(const GrayImage &image, std::ptrdiff_t offset) {
    const auto h = static_cast<std::ptrdiff_t>(image.height());
    const auto w = static_cast<std::ptrdiff_t>(image.width());
    std::vector<double> line;
    const std::ptrdiff_t first = std::max<std::ptrdiff_t>(0, -offset);
    for (std::ptrdiff_t p = first; p < h && p + offset < w; ++p) {
        line.push_back(image(static_cast<std::size_t>(p), static_cast<std::size_t>(p + offset)));
    }
    return line;
}

std::vector<double> diag_pe(const GrayImage &image, const DirectionalConfig &config) {
    config.validate(image.height(), image.width());
    const auto k_max = static_cast<std::ptrdiff_t>(config.half_range);
    std::vector<double> out;
    out.reserve(config.line_count());
    for (std::ptrdiff_t k = -k_max; k <= k_max; ++k) {
        out.push_back(combine(diagonal(image, k), config.ordinal, config.aggregation));
    }
    return out;
}

std::vector<double> antidiag_pe(const GrayImage &image, const DirectionalConfig &config) {
    return diag_pe(image.flipped_lr(), config);
}

std::vector<double> patch(const GrayImage &image, std::size_t row, std::size_t col, std::size_t height,
                          std::size_t width) {
    if (row + height > image.height() || col + width > image.width()) {
        throw DomainError("patch exceeds image bounds");
    }
    std::vector<double> out;
    out.reserve(height * width);
    for (std::size_t r = row; r < row + height; ++r) {
        const auto line = image.row(r).subspan(col, width);
        out.insert(out.end(), line.begin(), line.end());
    }
    return out;
}

std::vector<double> patch_pe(const GrayImage &image, const PatchConfig &config, const ordinal::OrdinalConfig &ordinal) {
    config.validate(image.height(), image.width(), ordinal);
    const std::size_t rows = config.count_along(image.height(), config.patch_height);
    const std::size_t cols = config.count_along(image.width(), config.patch_width);
    std::vector<double> out;
    out.reserve(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const auto values = patch(image, i * config.stride, j * config.stride, config.patch_height, config.patch_width);
            out.push_back(config.bidirectional ? ordinal::bidirectional_pe(values, ordinal)
                                               : ordinal::permutation_entropy(values, ordinal).normalized);
        }
    }
    return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("pearson: vectors of length " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()));
    }
    if (a.size() < 2) {
        throw InsufficientLength(a.size(), 2);
    }
    const auto is_constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    };
    if (is_constant(a) || is_constant(b)) {
        return 0.0;
    }
    const auto n = static_cast<double>(a.size());
    double mean_a = 0.0;
    double mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= n;
    mean_b /= n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) {
        return 0.0;
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> adjacent_row_corr(const GrayImage &image) {
    if (image.height() < 2 || image.width() < 2) {
        throw DimensionMismatch("row correlation needs an image of at least 2x2");
    }
    std::vector<double> out(image.height() - 1);
    for (std::size_t r = 0; r + 1 < image.height(); ++r) {
        out[r] = pearson(image.row(r), image.row(r + 1));
    }
    return out;
}

std::vector<double> adjacent_col_corr(const GrayImage &image) {
    if (image.height() < 2 || image.width() < 2) {
        throw DimensionMismatch("column correlation needs an image of at least 2x2");
    }
    std::vector<double> out(image.width() - 1);
    auto current = image.column(0);
    for (std::size_t c = 0; c + 1 < image.width(); ++c) {
        auto next = image.column(c + 1);
        out[c] = pearson(current, next);
        current = std::move(next);
    }
    return out;
}

}  // namespace pefusion::imagefeat
