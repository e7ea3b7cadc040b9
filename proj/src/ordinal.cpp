#include "pefusion/ordinal.hpp"

#include "pefusion/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace pefusion::ordinal {

namespace {

constexpr std::array<std::uint64_t, 11> factorials{1, 1, 2, 6, 24, 120, 720, 5040, 40320, 362880, 3628800};

// Ranks the window read with `stride` (+1 forward, -1 backward) starting at `first`.
// Stable insertion sort keeps ties in order of appearance along the reading direction.
PatternIndex rank_window(const double *first, std::ptrdiff_t stride, std::size_t d) {
    std::array<std::size_t, OrdinalConfig::max_dimension> order{};
    for (std::size_t i = 0; i < d; ++i) {
        const double v = first[static_cast<std::ptrdiff_t>(i) * stride];
        std::size_t j = i;
        while (j > 0 && first[static_cast<std::ptrdiff_t>(order[j - 1]) * stride] > v) {
            order[j] = order[j - 1];
            --j;
        }
        order[j] = i;
    }
    // Lehmer code of the sorting permutation.
    PatternIndex rank = 0;
    for (std::size_t i = 0; i < d; ++i) {
        std::size_t smaller = 0;
        for (std::size_t j = i + 1; j < d; ++j) {
            smaller += order[j] < order[i] ? 1 : 0;
        }
        rank += static_cast<PatternIndex>(smaller * factorials[d - 1 - i]);
    }
    return rank;
}

void require_length(std::span<const double> series, const OrdinalConfig &config) {
    if (series.size() < config.min_length()) {
        throw InsufficientLength(series.size(), config.min_length());
    }
}

// Pattern ranks of every window, reading forward or backward. Windows are
// taken from the reversed sequence in the backward case.
std::vector<PatternIndex> window_ranks(std::span<const double> series, const OrdinalConfig &config, bool reversed) {
    require_length(series, config);
    const std::size_t d = config.dimension();
    const auto tau = static_cast<std::ptrdiff_t>(config.delay());
    const std::size_t windows = series.size() - (d - 1) * config.delay();
    std::vector<PatternIndex> ranks(windows);
    if (!reversed) {
        for (std::size_t t = 0; t < windows; ++t) {
            ranks[t] = rank_window(series.data() + t, tau, d);
        }
    } else {
        const double *last = series.data() + series.size() - 1;
        for (std::size_t t = 0; t < windows; ++t) {
            ranks[t] = rank_window(last - t, -tau, d);
        }
    }
    return ranks;
}

double log2_factorial(std::size_t d) { return std::log2(static_cast<double>(factorials[d])); }

EntropyValue entropy_of_ranks(std::vector<PatternIndex> ranks, const OrdinalConfig &config) {
    std::sort(ranks.begin(), ranks.end());
    const auto total = static_cast<double>(ranks.size());
    double h = 0.0;
    for (std::size_t i = 0; i < ranks.size();) {
        std::size_t j = i;
        while (j < ranks.size() && ranks[j] == ranks[i]) {
            ++j;
        }
        const double p = static_cast<double>(j - i) / total;
        h -= p * std::log2(p);
        i = j;
    }
    h = std::max(h, 0.0);
    const double normalized = std::clamp(h / log2_factorial(config.dimension()), 0.0, 1.0);
    return {h, normalized};
}

}  // namespace

OrdinalConfig::OrdinalConfig(std::size_t dimension, std::size_t delay) : dimension_(dimension), delay_(delay) {
    if (dimension_ < 2 || dimension_ > max_dimension) {
        throw ConfigError("embedding dimension must lie in [2, " + std::to_string(max_dimension) + "], got " +
                          std::to_string(dimension_));
    }
    if (delay_ < 1) {
        throw ConfigError("time delay must be >= 1");
    }
}

std::uint64_t OrdinalConfig::pattern_count() const noexcept { return factorials[dimension_]; }

PatternIndex ordinal_pattern(std::span<const double> window, const OrdinalConfig &config) {
    if (window.size() != config.dimension()) {
        throw DimensionMismatch("ordinal window has " + std::to_string(window.size()) + " values, embedding dimension is " +
                                std::to_string(config.dimension()));
    }
    return rank_window(window.data(), 1, config.dimension());
}

PatternDistribution pattern_distribution(std::span<const double> series, const OrdinalConfig &config) {
    PatternDistribution dist;
    for (const PatternIndex r : window_ranks(series, config, false)) {
        ++dist.counts[r];
        ++dist.total_windows;
    }
    return dist;
}

EntropyValue entropy_of(const PatternDistribution &dist, const OrdinalConfig &config) {
    if (dist.total_windows == 0) {
        throw InvalidArgument("pattern distribution is empty");
    }
    const auto total = static_cast<double>(dist.total_windows);
    double h = 0.0;
    for (const auto &[pattern, count] : dist.counts) {
        if (count == 0) {
            continue;
        }
        const double p = static_cast<double>(count) / total;
        h -= p * std::log2(p);
    }
    h = std::max(h, 0.0);
    return {h, std::clamp(h / log2_factorial(config.dimension()), 0.0, 1.0)};
}

EntropyValue permutation_entropy(std::span<const double> series, const OrdinalConfig &config) {
    return entropy_of_ranks(window_ranks(series, config, false), config);
}

double reverse_permutation_entropy(std::span<const double> series, const OrdinalConfig &config) {
    return entropy_of_ranks(window_ranks(series, config, true), config).normalized;
}

double bidirectional_pe(std::span<const double> series, const OrdinalConfig &config) {
    const double forward = permutation_entropy(series, config).normalized;
    const double backward = reverse_permutation_entropy(series, config);
    return std::sqrt(forward * backward);
}

}  // namespace pefusion::ordinal
