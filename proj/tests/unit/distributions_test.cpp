#include "ampest/distributions.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

namespace ampest {
namespace {

const Family kFamilies[] = {Family::uniform, Family::dirichlet, Family::zipf,
                            Family::binomial, Family::poisson, Family::geometric};

long double sum(const std::vector<double>& p) { return std::accumulate(p.begin(), p.end(), 0.0L); }

TEST(DistributionsTest, names_round_trip)
{
    for (Family f : kFamilies)
        EXPECT_EQ(f, parse_family(to_string(f)));
    EXPECT_THROW(parse_family("cauchy"), std::invalid_argument);
    for (SplitMode m : {SplitMode::two_stream, SplitMode::thinned, SplitMode::shared})
        EXPECT_EQ(m, parse_split_mode(to_string(m)));
}

TEST(DistributionsTest, normalized_for_every_family)
{
    for (Family f : kFamilies) {
        for (std::size_t k : {1u, 2u, 10u, 1000u, 100000u, 1000000u}) {
            const auto d = make_distribution(f, k, NAN, 42);
            ASSERT_EQ(k, d.k());
            EXPECT_NEAR(1.0L, sum(d.probs), 1e-12L) << to_string(f) << " k=" << k;
            for (double p : d.probs)
                EXPECT_GE(p, 0.0);
        }
    }
}

TEST(DistributionsTest, family_shapes)
{
    const auto u = make_distribution(Family::uniform, 4);
    EXPECT_EQ(0.25, u.probs[3]);

    const auto z = make_distribution(Family::zipf, 3, 1.0);
    const double h3 = 1 + 0.5 + 1.0 / 3;
    EXPECT_NEAR(1 / h3, z.probs[0], 1e-15);
    EXPECT_NEAR(1 / (3 * h3), z.probs[2], 1e-15);

    const auto b = make_distribution(Family::binomial, 3, 0.5);
    EXPECT_NEAR(0.25, b.probs[0], 1e-15);
    EXPECT_NEAR(0.5, b.probs[1], 1e-15);

    const auto g = make_distribution(Family::geometric, 2, 0.5);
    EXPECT_NEAR(2.0 / 3, g.probs[0], 1e-15);

    const auto p = make_distribution(Family::poisson, 2, 1.0);
    EXPECT_NEAR(0.5, p.probs[0], 1e-15);
}

TEST(DistributionsTest, spec_examples)
{
    for (double p : make_distribution(Family::uniform, 5).probs)
        EXPECT_EQ(0.2, p);

    const auto z = make_distribution(Family::zipf, 3, 1.5);
    const double norm = 1 + std::pow(2.0, -1.5) + std::pow(3.0, -1.5);
    EXPECT_NEAR(1 / norm, z.probs[0], 1e-15);
    EXPECT_NEAR(std::pow(2.0, -1.5) / norm, z.probs[1], 1e-15);
    EXPECT_NEAR(std::pow(3.0, -1.5) / norm, z.probs[2], 1e-15);

    // 0.01^{x-1} 0.99 over x = 1..k; the tail past the first few is negligible.
    const auto g = make_distribution(Family::geometric, 10000, 0.99);
    const double total = 0.99 * (1 - std::pow(0.01, 10000)) / (1 - 0.01);
    EXPECT_NEAR(0.99 / total, g.probs[0], 1e-15);
    EXPECT_NEAR(0.01 * 0.99 / total, g.probs[1], 1e-17);
    EXPECT_NEAR(1e-4 * 0.99 / total, g.probs[2], 1e-18);
}

TEST(DistributionsTest, dirichlet_is_seeded)
{
    const auto a = make_distribution(Family::dirichlet, 100, 2.0, 9);
    const auto b = make_distribution(Family::dirichlet, 100, 2.0, 9);
    const auto c = make_distribution(Family::dirichlet, 100, 2.0, 10);
    EXPECT_EQ(a.probs, b.probs);
    EXPECT_NE(a.probs, c.probs);
}

TEST(DistributionsTest, rejects_bad_parameters)
{
    EXPECT_THROW(make_distribution(Family::uniform, 0), std::invalid_argument);
    EXPECT_THROW(make_distribution(Family::zipf, 10, -1.0), std::invalid_argument);
    EXPECT_THROW(make_distribution(Family::binomial, 10, 1.0), std::invalid_argument);
    EXPECT_THROW(make_distribution(Family::geometric, 10, 0.0), std::invalid_argument);
    EXPECT_THROW(make_distribution(Family::dirichlet, 10, 0.0), std::invalid_argument);
}

TEST(HistogramTest, invariants)
{
    const std::vector<std::uint64_t> dense = {0, 3, 0, 0, 5, 1};
    const auto h = Histogram::from_dense(dense);
    EXPECT_EQ(3u, h.distinct());
    EXPECT_EQ(9u, h.total());
    EXPECT_EQ(3u, h.count(1));
    EXPECT_EQ(0u, h.count(2));
    EXPECT_EQ(0u, h.count(99));
    for (const auto& [x, c] : h.entries())
        EXPECT_GT(c, 0u);

    std::map<std::size_t, std::uint64_t> m = {{1, 3}, {4, 5}, {5, 1}};
    EXPECT_EQ(h, Histogram::from_map(m));

    Histogram bad;
    bad.push_back(4, 1);
    EXPECT_THROW(bad.push_back(4, 1), std::invalid_argument);
    EXPECT_TRUE(Histogram{}.empty());
}

TEST(SamplingTest, fixed_mode_total_is_exact)
{
    Rng rng(1);
    for (Family f : kFamilies) {
        const auto d = make_distribution(f, 500, NAN, 3);
        for (double n : {1.0, 17.0, 1000.0, 123456.0}) {
            const auto h = sample_histogram(d, n, SamplingMode::fixed, rng);
            EXPECT_EQ(static_cast<std::uint64_t>(n), h.total()) << to_string(f);
        }
    }
}

TEST(SamplingTest, point_mass_count_is_poisson)
{
    const auto d = make_distribution(Family::uniform, 1);
    Rng rng(101);
    const int reps = 10000;
    long double s = 0;
    for (int i = 0; i < reps; ++i) {
        const auto h = sample_histogram(d, 100, SamplingMode::poissonized, rng);
        ASSERT_LE(h.distinct(), 1u);
        s += h.total();
    }
    // 3 sigma of the mean of 10^4 Poi(100) draws.
    EXPECT_NEAR(100.0, static_cast<double>(s / reps), 3 * std::sqrt(100.0 / reps));
}

TEST(SamplingTest, large_uniform_sample_is_balanced)
{
    const auto d = make_distribution(Family::uniform, 2);
    Rng rng(102);
    for (int i = 0; i < 20; ++i) {
        const auto h = sample_histogram(d, 1e6, SamplingMode::poissonized, rng);
        EXPECT_NEAR(0.5, static_cast<double>(h.count(0)) / h.total(), 0.002);
    }
}

TEST(SamplingTest, per_symbol_means_match_rate)
{
    // 10^4 trials on k = 10 distributions, within 4 standard errors of n p_x.
    const double n = 50;
    const int reps = 10000;
    for (Family f : kFamilies) {
        const auto d = make_distribution(f, 10, f == Family::poisson ? 4.0 : NAN, 6);
        for (SplitMode mode : {SplitMode::two_stream, SplitMode::thinned}) {
            Rng rng(1000 + static_cast<int>(f));
            std::vector<long double> first(10, 0), second(10, 0);
            for (int i = 0; i < reps; ++i) {
                const auto s = split_sample(d, n, mode, rng);
                for (std::size_t x = 0; x < 10; ++x) {
                    first[x] += s.first.count(x);
                    second[x] += s.second.count(x);
                }
            }
            const double rate = mode == SplitMode::thinned ? n / 2 : n;
            for (std::size_t x = 0; x < 10; ++x) {
                const double mean = rate * d.probs[x];
                const double se = std::sqrt(mean / reps);
                EXPECT_NEAR(mean, static_cast<double>(first[x] / reps), 4 * se + 1e-12)
                    << to_string(f) << " " << to_string(mode) << " x=" << x;
                EXPECT_NEAR(mean, static_cast<double>(second[x] / reps), 4 * se + 1e-12)
                    << to_string(f) << " " << to_string(mode) << " x=" << x;
            }
        }
    }
}

TEST(SamplingTest, poissonized_moments)
{
    // Total count ~ Poi(n): mean n, variance n.
    const auto d = make_distribution(Family::zipf, 200);
    Rng rng(77);
    const int reps = 2000;
    const double n = 500;
    long double s = 0, s2 = 0;
    for (int i = 0; i < reps; ++i) {
        const double total = static_cast<double>(sample_histogram(d, n, SamplingMode::poissonized, rng).total());
        s += total;
        s2 += total * total;
    }
    const double mean = static_cast<double>(s / reps);
    const double var = static_cast<double>(s2 / reps - (s / reps) * (s / reps));
    EXPECT_NEAR(n, mean, 4 * std::sqrt(n / reps));
    // Var of sample variance ~ 2 n^2 / reps for large n.
    EXPECT_NEAR(n, var, 4 * n * std::sqrt(2.0 / reps));
}

TEST(SplitTest, shared_aliases_the_streams)
{
    const auto d = make_distribution(Family::uniform, 50);
    Rng rng(5);
    const auto s = split_sample(d, 300, SplitMode::shared, rng);
    EXPECT_EQ(s.first, s.second);
    EXPECT_EQ(300.0, s.rate);
}

TEST(SplitTest, thinned_partitions_one_draw)
{
    const auto d = make_distribution(Family::zipf, 300);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng a(seed), b(seed);
        const auto whole = sample_histogram(d, 2000, SamplingMode::poissonized, a);
        const auto s = split_sample(d, 2000, SplitMode::thinned, b);
        EXPECT_EQ(1000.0, s.rate);
        EXPECT_EQ(whole.total(), s.first.total() + s.second.total());
        for (const auto& [x, c] : whole.entries())
            EXPECT_EQ(c, s.first.count(x) + s.second.count(x));
    }
}

TEST(SplitTest, thinned_marginal_has_half_rate)
{
    const auto d = make_distribution(Family::uniform, 10);
    Rng rng(8);
    const int reps = 2000;
    long double s = 0;
    for (int i = 0; i < reps; ++i)
        s += static_cast<double>(split_sample(d, 400, SplitMode::thinned, rng).first.total());
    EXPECT_NEAR(200.0, static_cast<double>(s / reps), 4 * std::sqrt(200.0 / reps));
}

TEST(SplitTest, two_stream_counts_are_uncorrelated)
{
    // 2000 trials rather than 200: at 200 the 0.02 band is under one
    // standard error of the correlation estimate.
    const auto d = make_distribution(Family::uniform, 10);
    Rng rng(20190101);
    const int reps = 2000;
    std::vector<double> a, b;
    for (int i = 0; i < reps; ++i) {
        const auto s = split_sample(d, 1e5, SplitMode::two_stream, rng);
        EXPECT_EQ(1e5, s.rate);
        for (std::size_t x = 0; x < 10; ++x) {
            a.push_back(static_cast<double>(s.first.count(x)));
            b.push_back(static_cast<double>(s.second.count(x)));
        }
    }
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    EXPECT_NEAR(0.0, sab / std::sqrt(saa * sbb), 0.02);
}

TEST(SplitTest, reproducible_from_seed)
{
    const auto d = make_distribution(Family::geometric, 100, 0.1);
    Rng a(99), b(99);
    const auto s1 = split_sample(d, 1000, SplitMode::two_stream, a);
    const auto s2 = split_sample(d, 1000, SplitMode::two_stream, b);
    EXPECT_EQ(s1.first, s2.first);
    EXPECT_EQ(s1.second, s2.second);
}

TEST(DistributionsTest, probability_csv)
{
    std::ostringstream os;
    write_probabilities_csv(os, make_distribution(Family::uniform, 2));
    EXPECT_EQ("0.5\n0.5\n", os.str());
}

} // namespace
} // namespace ampest
