#pragma once

// Bandt-Pompe ordinal patterns and permutation entropy of 1D sequences.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>

namespace pefusion::ordinal {

/// Embedding dimension and delay shared by every permutation-entropy computation.
class OrdinalConfig {
  public:
    static constexpr std::size_t max_dimension = 10;

    /// Throws ConfigError unless 2 <= dimension <= 10 and delay >= 1.
    OrdinalConfig(std::size_t dimension = 3, std::size_t delay = 1);

    [[nodiscard]] std::size_t dimension() const noexcept { return dimension_; }
    [[nodiscard]] std::size_t delay() const noexcept { return delay_; }
    /// Shortest sequence that yields at least one window: (d-1)*tau + 1.
    [[nodiscard]] std::size_t min_length() const noexcept { return (dimension_ - 1) * delay_ + 1; }
    /// d!, the number of distinct ordinal patterns.
    [[nodiscard]] std::uint64_t pattern_count() const noexcept;

    friend bool operator==(const OrdinalConfig &, const OrdinalConfig &) = default;

  private:
    std::size_t dimension_;
    std::size_t delay_;
};

using PatternIndex = std::uint32_t;

struct PatternDistribution {
    std::map<PatternIndex, std::uint64_t> counts;
    std::uint64_t total_windows = 0;
};

struct EntropyValue {
    double raw_bits = 0.0;
    double normalized = 0.0;
};

/// Lexicographic rank (in S_d) of the permutation that stably sorts `window` ascending.
/// Equal values keep their order of appearance.
[[nodiscard]] PatternIndex ordinal_pattern(std::span<const double> window, const OrdinalConfig &config);

[[nodiscard]] PatternDistribution pattern_distribution(std::span<const double> series, const OrdinalConfig &config);

/// Shannon entropy (bits) of the pattern distribution plus its value normalised by log2(d!).
[[nodiscard]] EntropyValue permutation_entropy(std::span<const double> series, const OrdinalConfig &config);

/// Entropy of an already computed distribution.
[[nodiscard]] EntropyValue entropy_of(const PatternDistribution &dist, const OrdinalConfig &config);

/// Normalised PE of the sequence read backwards.
[[nodiscard]] double reverse_permutation_entropy(std::span<const double> series, const OrdinalConfig &config);

/// sqrt(h(x) * h(reverse(x))) with normalised entropies.
[[nodiscard]] double bidirectional_pe(std::span<const double> series, const OrdinalConfig &config);

}  // namespace pefusion::ordinal
