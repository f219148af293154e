#pragma once
//---------------------------------------------------------------------------//
//! \file ampest/distributions.hpp
//! Experimental distributions (truncated and renormalized to k symbols),
//! count histograms, and Poissonized sampling.
//---------------------------------------------------------------------------//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "numerics.hpp"

namespace ampest {

using Rng = std::mt19937_64;

enum class Family
{
    uniform,
    dirichlet,
    zipf,
    binomial,
    poisson,
    geometric,
};

inline std::string_view to_string(Family family)
{
    switch (family) {
    case Family::uniform: return "uniform";
    case Family::dirichlet: return "dirichlet";
    case Family::zipf: return "zipf";
    case Family::binomial: return "binomial";
    case Family::poisson: return "poisson";
    case Family::geometric: return "geometric";
    }
    return "unknown";
}

inline Family parse_family(std::string_view name)
{
    if (name == "uniform") return Family::uniform;
    if (name == "dirichlet" || name == "dirichlet_drawn") return Family::dirichlet;
    if (name == "zipf") return Family::zipf;
    if (name == "binomial") return Family::binomial;
    if (name == "poisson") return Family::poisson;
    if (name == "geometric") return Family::geometric;
    throw std::invalid_argument("unknown distribution '" + std::string(name) + "'");
}

//! Parameter used in the experiments when none is given: Dirichlet
//! concentration 2, Zipf power 1.5, binomial 0.3, Poisson mean 3000,
//! geometric success probability 0.99.
inline double default_family_param(Family family)
{
    switch (family) {
    case Family::uniform: return 0.0;
    case Family::dirichlet: return 2.0;
    case Family::zipf: return 1.5;
    case Family::binomial: return 0.3;
    case Family::poisson: return 3000.0;
    case Family::geometric: return 0.99;
    }
    return 0.0;
}

struct Distribution
{
    std::vector<double> probs;
    Family family = Family::uniform;
    double param = 0.0;

    std::size_t k() const { return probs.size(); }
};

namespace detail {

//! Normalize log-weights into probabilities with a long double sum.
inline std::vector<double> normalize_log_weights(const std::vector<long double>& log_w)
{
    const long double top = *std::max_element(log_w.begin(), log_w.end());
    std::vector<long double> w(log_w.size());
    long double total = 0.0L;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::exp(log_w[i] - top);
        total += w[i];
    }
    std::vector<double> probs(w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        probs[i] = static_cast<double>(w[i] / total);
    return probs;
}

} // namespace detail

//! Build a k-symbol distribution. A NaN param selects the family default.
//! Only the Dirichlet family consumes the seed.
inline Distribution make_distribution(Family family, std::size_t k,
                                      double param = std::numeric_limits<double>::quiet_NaN(),
                                      std::uint64_t seed = 0)
{
    if (k == 0)
        throw std::invalid_argument("make_distribution: k must be positive");
    if (std::isnan(param))
        param = default_family_param(family);

    Distribution dist;
    dist.family = family;
    dist.param = param;
    std::vector<long double> log_w(k);

    switch (family) {
    case Family::uniform:
        dist.probs.assign(k, 1.0 / static_cast<double>(k));
        return dist;
    case Family::dirichlet: {
        if (!(param > 0))
            throw std::invalid_argument("dirichlet: concentration must be positive");
        Rng rng(seed);
        std::gamma_distribution<double> gamma(param, 1.0);
        for (auto& w : log_w) {
            double g = 0;
            while (g <= 0)
                g = gamma(rng);
            w = std::log(static_cast<long double>(g));
        }
        break;
    }
    case Family::zipf:
        if (!(param > 0))
            throw std::invalid_argument("zipf: power must be positive");
        for (std::size_t x = 0; x < k; ++x)
            log_w[x] = -param * std::log(static_cast<long double>(x + 1));
        break;
    case Family::binomial: {
        if (!(param > 0 && param < 1))
            throw std::invalid_argument("binomial: success probability must lie in (0, 1)");
        const auto trials = static_cast<std::uint64_t>(k - 1);
        const long double lp = std::log(static_cast<long double>(param));
        const long double lq = std::log1p(-static_cast<long double>(param));
        for (std::size_t x = 0; x < k; ++x) {
            log_w[x] = log_factorial(trials) - log_factorial(x) - log_factorial(trials - x)
                       + static_cast<long double>(x) * lp
                       + static_cast<long double>(trials - x) * lq;
        }
        break;
    }
    case Family::poisson: {
        if (!(param > 0))
            throw std::invalid_argument("poisson: mean must be positive");
        const long double lm = std::log(static_cast<long double>(param));
        for (std::size_t x = 0; x < k; ++x)
            log_w[x] = static_cast<long double>(x) * lm - log_factorial(x);
        break;
    }
    case Family::geometric: {
        if (!(param > 0 && param < 1))
            throw std::invalid_argument("geometric: success probability must lie in (0, 1)");
        const long double lq = std::log1p(-static_cast<long double>(param));
        for (std::size_t x = 0; x < k; ++x)
            log_w[x] = static_cast<long double>(x) * lq;
        break;
    }
    }
    dist.probs = detail::normalize_log_weights(log_w);
    return dist;
}

//! One probability per line.
inline void write_probabilities_csv(std::ostream& os, const Distribution& dist)
{
    char buf[32];
    for (double p : dist.probs) {
        std::snprintf(buf, sizeof(buf), "%.17g", p);
        os << buf << '\n';
    }
}

//---------------------------------------------------------------------------//
// Histograms
//---------------------------------------------------------------------------//

//! Symbol counts of one sample stream. Only nonzero counts are stored,
//! ordered by symbol index.
class Histogram
{
  public:
    using Entry = std::pair<std::size_t, std::uint64_t>;

    Histogram() = default;

    static Histogram from_dense(std::span<const std::uint64_t> counts)
    {
        Histogram h;
        for (std::size_t x = 0; x < counts.size(); ++x)
            h.push_back(x, counts[x]);
        return h;
    }

    static Histogram from_map(const std::map<std::size_t, std::uint64_t>& counts)
    {
        Histogram h;
        for (const auto& [x, c] : counts)
            h.push_back(x, c);
        return h;
    }

    //! Append a count for a symbol larger than any stored so far.
    void push_back(std::size_t symbol, std::uint64_t count)
    {
        if (count == 0)
            return;
        if (!entries_.empty() && entries_.back().first >= symbol)
            throw std::invalid_argument("Histogram: symbols must be appended in increasing order");
        entries_.emplace_back(symbol, count);
        total_ += count;
    }

    std::uint64_t count(std::size_t symbol) const
    {
        auto it = std::lower_bound(entries_.begin(), entries_.end(), symbol,
                                   [](const Entry& e, std::size_t s) { return e.first < s; });
        return (it != entries_.end() && it->first == symbol) ? it->second : 0;
    }

    std::span<const Entry> entries() const { return entries_; }
    std::uint64_t total() const { return total_; }
    std::size_t distinct() const { return entries_.size(); }
    bool empty() const { return total_ == 0; }

    friend bool operator==(const Histogram&, const Histogram&) = default;

  private:
    std::vector<Entry> entries_;
    std::uint64_t total_ = 0;
};

enum class SamplingMode
{
    poissonized,
    fixed,
};

//! Poissonized: independent N_x ~ Poi(n p_x). Fixed: exactly round(n)
//! i.i.d. draws, generated as a sequence of conditional binomials.
inline Histogram sample_histogram(const Distribution& dist, double n, SamplingMode mode, Rng& rng)
{
    if (!(n > 0))
        throw std::invalid_argument("sample_histogram: n must be positive");
    Histogram hist;
    if (mode == SamplingMode::poissonized) {
        for (std::size_t x = 0; x < dist.k(); ++x) {
            const double mean = n * dist.probs[x];
            if (mean <= 0)
                continue;
            std::poisson_distribution<std::uint64_t> poi(mean);
            hist.push_back(x, poi(rng));
        }
        return hist;
    }

    auto remaining = static_cast<std::uint64_t>(std::llround(n));
    long double mass_left = 1.0L;
    for (std::size_t x = 0; x < dist.k() && remaining > 0; ++x) {
        const double p = dist.probs[x];
        if (p <= 0)
            continue;
        std::uint64_t c = remaining;
        const double frac = static_cast<double>(p / mass_left);
        if (frac < 1 && x + 1 < dist.k()) {
            std::binomial_distribution<std::uint64_t> bin(remaining, frac);
            c = bin(rng);
        }
        hist.push_back(x, c);
        remaining -= c;
        mass_left -= p;
        if (mass_left <= 0)
            mass_left = std::numeric_limits<long double>::min();
    }
    return hist;
}

enum class SplitMode
{
    two_stream,
    thinned,
    shared,
};

inline std::string_view to_string(SplitMode mode)
{
    switch (mode) {
    case SplitMode::two_stream: return "two_stream";
    case SplitMode::thinned: return "thinned";
    case SplitMode::shared: return "shared";
    }
    return "unknown";
}

inline SplitMode parse_split_mode(std::string_view name)
{
    if (name == "two_stream") return SplitMode::two_stream;
    if (name == "thinned") return SplitMode::thinned;
    if (name == "shared") return SplitMode::shared;
    throw std::invalid_argument("unknown split mode '" + std::string(name) + "'");
}

//! The two count streams consumed by the amplified estimator. `rate` is the
//! per-stream Poisson parameter.
struct SplitSample
{
    Histogram first;
    Histogram second;
    double rate = 0.0;
};

//! two_stream: independent draws of rate `budget` each.
//! thinned: one draw of rate `budget`, samples routed by a fair coin.
//! shared: one draw used as both streams.
inline SplitSample split_sample(const Distribution& dist, double budget, SplitMode mode, Rng& rng,
                                SamplingMode sampling = SamplingMode::poissonized)
{
    if (!(budget > 0))
        throw std::invalid_argument("split_sample: budget must be positive");
    SplitSample out;
    switch (mode) {
    case SplitMode::two_stream:
        out.first = sample_histogram(dist, budget, sampling, rng);
        out.second = sample_histogram(dist, budget, sampling, rng);
        out.rate = budget;
        break;
    case SplitMode::thinned: {
        const Histogram whole = sample_histogram(dist, budget, sampling, rng);
        for (const auto& [x, c] : whole.entries()) {
            std::binomial_distribution<std::uint64_t> coin(c, 0.5);
            const std::uint64_t heads = coin(rng);
            out.first.push_back(x, heads);
            out.second.push_back(x, c - heads);
        }
        out.rate = budget / 2;
        break;
    }
    case SplitMode::shared:
        out.first = sample_histogram(dist, budget, sampling, rng);
        out.second = out.first;
        out.rate = budget;
        break;
    }
    return out;
}

} // namespace ampest
