#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pefusion/error.hpp"
#include "pefusion/ordinal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

using namespace pefusion;
using namespace pefusion::ordinal;

namespace {

// Independent reference: enumerate S_d lexicographically, stable-argsort every window, look the
// 1-based permutation up, and evaluate the entropy with natural logarithms.
struct Reference {
    std::map<std::vector<std::size_t>, std::uint32_t> rank;
    std::size_t d;
    std::size_t tau;

    Reference(std::size_t dim, std::size_t delay) : d(dim), tau(delay) {
        std::vector<std::size_t> p(d);
        std::iota(p.begin(), p.end(), 1);
        std::uint32_t r = 0;
        do {
            rank[p] = r++;
        } while (std::next_permutation(p.begin(), p.end()));
    }

    std::uint32_t pattern(const std::vector<double> &w) const {
        std::vector<std::size_t> idx(w.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return w[a] < w[b]; });
        for (auto &i : idx) {
            ++i;
        }
        return rank.at(idx);
    }

    std::map<std::uint32_t, std::uint64_t> counts(const std::vector<double> &x) const {
        std::map<std::uint32_t, std::uint64_t> c;
        for (std::size_t t = 0; t + (d - 1) * tau < x.size(); ++t) {
            std::vector<double> w;
            for (std::size_t j = 0; j < d; ++j) {
                w.push_back(x[t + j * tau]);
            }
            ++c[pattern(w)];
        }
        return c;
    }

    double normalized(const std::vector<double> &x, double log_base) const {
        const auto c = counts(x);
        double total = 0.0;
        for (const auto &[k, v] : c) {
            total += static_cast<double>(v);
        }
        double h = 0.0;
        for (const auto &[k, v] : c) {
            const double p = static_cast<double>(v) / total;
            h -= p * std::log(p) / std::log(log_base);
        }
        return h / (std::log(std::tgamma(static_cast<double>(d) + 1.0)) / std::log(log_base));
    }
};

std::vector<double> reversed(std::vector<double> x) {
    std::reverse(x.begin(), x.end());
    return x;
}

std::vector<double> random_series(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(n);
    for (auto &v : x) {
        v = u(rng);
    }
    return x;
}

}  // namespace

TEST_CASE("config validation") {
    CHECK_THROWS_AS(OrdinalConfig(1, 1), ConfigError);
    CHECK_THROWS_AS(OrdinalConfig(11, 1), ConfigError);
    CHECK_THROWS_AS(OrdinalConfig(3, 0), ConfigError);
    const OrdinalConfig c(4, 2);
    CHECK(c.min_length() == 7);
    CHECK(c.pattern_count() == 24);
    CHECK(OrdinalConfig(10, 1).pattern_count() == 3628800);
}

TEST_CASE("ordinal patterns of the worked example windows") {
    const OrdinalConfig c3(3, 1);
    CHECK(ordinal_pattern(std::vector<double>{4, 7, 9}, c3) == 0);
    CHECK(ordinal_pattern(std::vector<double>{9, 10, 6}, c3) == 4);  // (3,1,2)
    CHECK(ordinal_pattern(std::vector<double>{7, 9, 10}, c3) == 0);
    CHECK(ordinal_pattern(std::vector<double>{5, 5, 5}, c3) == 0);
    CHECK(ordinal_pattern(std::vector<double>{3, 2, 1}, c3) == 5);
    CHECK_THROWS_AS((void)ordinal_pattern(std::vector<double>{1, 2}, c3), DimensionMismatch);
}

TEST_CASE("patterns agree with the reference for every dimension") {
    for (std::size_t d = 2; d <= 6; ++d) {
        const OrdinalConfig cfg(d, 1);
        const Reference ref(d, 1);
        std::mt19937_64 rng(d);
        std::uniform_int_distribution<int> small(0, 3);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> w(d);
            for (auto &v : w) {
                v = small(rng);
            }
            CHECK(ordinal_pattern(w, cfg) == ref.pattern(w));
        }
    }
}

TEST_CASE("pattern distributions") {
    const OrdinalConfig c3(3, 1);
    const auto d = pattern_distribution(std::vector<double>{4, 7, 9, 10, 6}, c3);
    CHECK(d.total_windows == 3);
    CHECK(d.counts == std::map<PatternIndex, std::uint64_t>{{0, 2}, {4, 1}});

    std::vector<double> inc(10);
    std::iota(inc.begin(), inc.end(), 1.0);
    const auto m = pattern_distribution(inc, c3);
    CHECK(m.counts == std::map<PatternIndex, std::uint64_t>{{0, 8}});

    const auto alt = pattern_distribution(std::vector<double>{1, 2, 1, 2, 1, 2}, OrdinalConfig(2, 1));
    CHECK(alt.total_windows == 5);
    CHECK(alt.counts == std::map<PatternIndex, std::uint64_t>{{0, 3}, {1, 2}});

    const auto delayed = pattern_distribution(std::vector<double>{1, 9, 2, 8, 3, 7, 4}, OrdinalConfig(3, 2));
    CHECK(delayed.total_windows == 3);
    CHECK(delayed.counts == std::map<PatternIndex, std::uint64_t>{{0, 2}, {5, 1}});

    try {
        (void)pattern_distribution(std::vector<double>{1, 2, 3, 4}, OrdinalConfig(3, 2));
        FAIL("expected InsufficientLength");
    } catch (const InsufficientLength &e) {
        CHECK(e.required() == 5);
        CHECK(e.got() == 4);
    }
}

TEST_CASE("worked example entropy") {
    const auto h = permutation_entropy(std::vector<double>{4, 7, 9, 10, 6}, OrdinalConfig(3, 1));
    const double expected_bits = -(2.0 / 3.0) * std::log2(2.0 / 3.0) - (1.0 / 3.0) * std::log2(1.0 / 3.0);
    CHECK(h.raw_bits == doctest::Approx(expected_bits).epsilon(1e-14));
    CHECK(h.raw_bits == doctest::Approx(0.9183).epsilon(1e-4));
    CHECK(h.normalized == doctest::Approx(expected_bits / std::log2(6.0)).epsilon(1e-14));
    CHECK(h.normalized == doctest::Approx(0.3553).epsilon(1e-4));
}

TEST_CASE("regular series have zero entropy") {
    const OrdinalConfig c3(3, 1);
    const std::vector<double> flat(8, 2.5);
    CHECK(permutation_entropy(flat, c3).raw_bits == 0.0);
    CHECK(permutation_entropy(flat, c3).normalized == 0.0);
    CHECK(bidirectional_pe(flat, c3) == 0.0);
    std::vector<double> dec(12);
    std::iota(dec.rbegin(), dec.rend(), 0.0);
    CHECK(permutation_entropy(dec, c3).normalized == 0.0);
}

TEST_CASE("bidirectional entropy with ties") {
    const OrdinalConfig c3(3, 1);
    const std::vector<double> x{0, 0, 1, 0, 0, 2};
    const auto fwd = pattern_distribution(x, c3);
    const auto rev = pattern_distribution(reversed(x), c3);
    CHECK(fwd.counts == std::map<PatternIndex, std::uint64_t>{{0, 2}, {1, 1}, {3, 1}});
    CHECK(rev.counts == std::map<PatternIndex, std::uint64_t>{{0, 1}, {1, 1}, {3, 2}});
    CHECK(fwd.counts != rev.counts);
    const double h = 1.5 / std::log2(6.0);
    CHECK(permutation_entropy(x, c3).normalized == doctest::Approx(h).epsilon(1e-14));
    CHECK(reverse_permutation_entropy(x, c3) == doctest::Approx(h).epsilon(1e-14));
    CHECK(bidirectional_pe(x, c3) == doctest::Approx(h).epsilon(1e-14));

    const std::vector<double> y{0, 0, 1, 1, 2, 0, 0};
    const Reference ref(3, 1);
    const double expect = std::sqrt(ref.normalized(y, 2.0) * ref.normalized(reversed(y), 2.0));
    CHECK(bidirectional_pe(y, c3) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(permutation_entropy(y, c3).normalized != doctest::Approx(reverse_permutation_entropy(y, c3)));
}

TEST_CASE("agreement with the reference on random integer series") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> v(0, 4);
    for (std::size_t d = 2; d <= 5; ++d) {
        for (std::size_t tau = 1; tau <= 3; ++tau) {
            const OrdinalConfig cfg(d, tau);
            const Reference ref(d, tau);
            for (int trial = 0; trial < 20; ++trial) {
                std::vector<double> x(cfg.min_length() + static_cast<std::size_t>(trial) * 3);
                for (auto &e : x) {
                    e = v(rng);
                }
                CHECK(permutation_entropy(x, cfg).normalized == doctest::Approx(ref.normalized(x, 2.0)).epsilon(1e-12));
                CHECK(reverse_permutation_entropy(x, cfg) ==
                      doctest::Approx(ref.normalized(reversed(x), 2.0)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("normalised entropy does not depend on the logarithm base") {
    const Reference ref(4, 1);
    const auto x = random_series(200, 8);
    const double h = permutation_entropy(x, OrdinalConfig(4, 1)).normalized;
    CHECK(ref.normalized(x, 2.0) == doctest::Approx(h).epsilon(1e-12));
    CHECK(ref.normalized(x, std::exp(1.0)) == doctest::Approx(h).epsilon(1e-12));
    CHECK(ref.normalized(x, 10.0) == doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("bounds and count totals") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> v(0, 2);
    for (int trial = 0; trial < 100; ++trial) {
        const OrdinalConfig cfg(2 + static_cast<std::size_t>(trial % 5), 1 + static_cast<std::size_t>(trial % 2));
        std::vector<double> x(cfg.min_length() + static_cast<std::size_t>(trial));
        for (auto &e : x) {
            e = v(rng);
        }
        const auto dist = pattern_distribution(x, cfg);
        std::uint64_t sum = 0;
        for (const auto &[k, c] : dist.counts) {
            CHECK(k < cfg.pattern_count());
            sum += c;
        }
        CHECK(sum == dist.total_windows);
        CHECK(dist.total_windows == x.size() - (cfg.dimension() - 1) * cfg.delay());
        const auto h = entropy_of(dist, cfg);
        CHECK(h.raw_bits >= 0.0);
        CHECK(h.raw_bits <= std::log2(static_cast<double>(cfg.pattern_count())) + 1e-12);
        CHECK(h.normalized >= 0.0);
        CHECK(h.normalized <= 1.0);
        const double b = bidirectional_pe(x, cfg);
        CHECK(b >= 0.0);
        CHECK(b <= 1.0);
    }
}

TEST_CASE("strictly increasing transforms preserve entropy exactly") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto x = random_series(60, seed);
        std::vector<double> y;
        std::vector<double> z;
        for (const double v : x) {
            y.push_back(std::exp(3.0 * v) - 7.0);
            z.push_back(v * v * v + 2.0 * v);
        }
        const OrdinalConfig cfg(3, 1);
        const auto hx = permutation_entropy(x, cfg);
        CHECK(permutation_entropy(y, cfg).raw_bits == hx.raw_bits);
        CHECK(permutation_entropy(z, cfg).normalized == hx.normalized);
    }
}

TEST_CASE("reversal invariance on tie-free series") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto x = random_series(20, 100 + seed);
        for (std::size_t d = 2; d <= 4; ++d) {
            const OrdinalConfig cfg(d, 1);
            const double h = permutation_entropy(x, cfg).normalized;
            CHECK(reverse_permutation_entropy(x, cfg) == doctest::Approx(h).epsilon(1e-12));
            CHECK(bidirectional_pe(x, cfg) == doctest::Approx(h).epsilon(1e-12));
        }
    }
}

TEST_CASE("uniform noise is near maximal entropy") {
    const auto x = random_series(10000, 77);
    CHECK(permutation_entropy(x, OrdinalConfig(3, 1)).normalized > 0.99);
}
