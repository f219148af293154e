#pragma once
//---------------------------------------------------------------------------//
//! \file ampest/benchmark.hpp
//! Monte-Carlo MSE sweeps over sample sizes and estimators.
//---------------------------------------------------------------------------//

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "distributions.hpp"
#include "estimators.hpp"
#include "properties.hpp"

namespace ampest {

enum class EstimatorId : std::uint32_t
{
    amplified = 0,
    empirical = 1,
    empirical_plus = 2,
    empirical_plusplus = 3,
    modified_empirical = 4,
};

inline std::string_view to_string(EstimatorId id)
{
    switch (id) {
    case EstimatorId::amplified: return "amplified";
    case EstimatorId::empirical: return "empirical";
    case EstimatorId::empirical_plus: return "empirical_plus";
    case EstimatorId::empirical_plusplus: return "empirical_plusplus";
    case EstimatorId::modified_empirical: return "modified_empirical";
    }
    return "unknown";
}

inline EstimatorId parse_estimator(std::string_view name)
{
    if (name == "amplified" || name == "new") return EstimatorId::amplified;
    if (name == "empirical") return EstimatorId::empirical;
    if (name == "empirical_plus" || name == "empirical+") return EstimatorId::empirical_plus;
    if (name == "empirical_plusplus" || name == "empirical++") return EstimatorId::empirical_plusplus;
    if (name == "modified_empirical") return EstimatorId::modified_empirical;
    throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

//! Sample size given to the plug-in baselines: n, n sqrt(ln n), n ln n.
inline double baseline_sample_size(EstimatorId id, double n)
{
    switch (id) {
    case EstimatorId::empirical_plus: return std::round(n * std::sqrt(std::log(n)));
    case EstimatorId::empirical_plusplus: return std::round(n * std::log(n));
    default: return n;
    }
}

//---------------------------------------------------------------------------//
// Seeding and aggregation
//---------------------------------------------------------------------------//

inline std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

//! Per-trial seed; the mixing chain is part of the results format and must
//! not change between releases.
inline std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t n, std::uint32_t estimator_id,
                                std::uint64_t trial_index)
{
    std::uint64_t h = splitmix64(master_seed);
    h = splitmix64(h ^ n);
    h = splitmix64(h ^ (0x5851f42d4c957f2dULL * (estimator_id + 1ULL)));
    h = splitmix64(h ^ trial_index);
    return h;
}

//! Seed for the experiment-wide Dirichlet draw.
inline std::uint64_t distribution_seed(std::uint64_t master_seed)
{
    return splitmix64(splitmix64(master_seed) ^ 0xd1b54a32d192ed03ULL);
}

inline double mse(std::span<const double> estimates, double truth)
{
    if (estimates.empty())
        throw std::invalid_argument("mse: no estimates");
    long double acc = 0.0L;
    for (double e : estimates) {
        const long double d = static_cast<long double>(e) - truth;
        acc += d * d;
    }
    return static_cast<double>(acc / static_cast<long double>(estimates.size()));
}

//---------------------------------------------------------------------------//
// Experiments
//---------------------------------------------------------------------------//

struct ExperimentConfig
{
    PropertySpec property = PropertySpec::entropy();
    Family family = Family::uniform;
    //! NaN selects the family default.
    double family_param = std::numeric_limits<double>::quiet_NaN();
    std::size_t k = 10000;
    std::vector<std::uint64_t> n_grid;
    int trials = 100;
    std::uint64_t seed = 1;
    std::vector<EstimatorId> estimators = {EstimatorId::amplified, EstimatorId::empirical};
    SplitMode split_mode = SplitMode::two_stream;
    SamplingMode sampling = SamplingMode::poissonized;
    ParamChoice param_choice;
    bool t_decay = true;
    unsigned threads = 1;
};

struct ResultRow
{
    std::string property;
    std::string distribution;
    std::size_t k = 0;
    std::uint64_t n = 0;
    std::string estimator;
    int trials = 0;
    double mse = 0.0;
    double mean_estimate = 0.0;
    double true_value = 0.0;
    std::uint64_t seed = 0;
    //! Set when the cell could not be run (e.g. parameter derivation).
    std::optional<std::string> error;
};

//! 10 log-spaced points from 1,000 to 100,000.
inline std::vector<std::uint64_t> default_n_grid()
{
    std::vector<std::uint64_t> grid;
    for (int i = 0; i < 10; ++i)
        grid.push_back(static_cast<std::uint64_t>(std::llround(std::pow(10.0, 3.0 + 2.0 * i / 9.0))));
    return grid;
}

inline std::vector<std::uint64_t> coverage_n_grid() { return {1000, 1500, 2000, 2500, 3000}; }

namespace detail {

//! Run body(i) for i in [0, count) on `threads` workers.
template<class Body>
void parallel_for(std::size_t count, unsigned threads, Body body)
{
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    {
        std::vector<std::jthread> workers;
        for (unsigned w = 0; w < std::min<std::size_t>(threads, count); ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < count && !failed; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        if (!failed.exchange(true))
                            failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace detail

//! Per-trial estimates for one (n, estimator) cell, in trial order.
inline std::vector<double> cell_estimates(const ExperimentConfig& cfg, const Distribution& dist, std::uint64_t n,
                                          EstimatorId id)
{
    std::optional<CoefficientBank> bank;
    if (id == EstimatorId::amplified) {
        const EstimatorParams params =
            derive_params(static_cast<double>(n), cfg.property, cfg.param_choice, cfg.split_mode, cfg.t_decay);
        bank.emplace(cfg.property, params);
    }
    const double size = baseline_sample_size(id, static_cast<double>(n));
    std::vector<double> estimates(static_cast<std::size_t>(cfg.trials));
    detail::parallel_for(estimates.size(), cfg.threads, [&](std::size_t trial) {
        Rng rng(trial_seed(cfg.seed, n, static_cast<std::uint32_t>(id), trial));
        switch (id) {
        case EstimatorId::amplified: {
            const SplitSample s = split_sample(dist, size, cfg.split_mode, rng, cfg.sampling);
            estimates[trial] = amplified_estimate(s, cfg.property, *bank).value;
            break;
        }
        case EstimatorId::modified_empirical:
            estimates[trial] = modified_empirical(sample_histogram(dist, size, cfg.sampling, rng), size, cfg.property);
            break;
        default:
            estimates[trial] = empirical(sample_histogram(dist, size, cfg.sampling, rng), cfg.property);
            break;
        }
    });
    return estimates;
}

//! The distribution an experiment runs on, including its Dirichlet draw.
inline Distribution experiment_distribution(const ExperimentConfig& cfg)
{
    return make_distribution(cfg.family, cfg.k, cfg.family_param, distribution_seed(cfg.seed));
}

inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg)
{
    if (cfg.trials < 1)
        throw std::invalid_argument("run_experiment: trials must be >= 1");
    if (cfg.n_grid.empty())
        throw std::invalid_argument("run_experiment: empty n grid");
    for (std::size_t i = 1; i < cfg.n_grid.size(); ++i) {
        if (cfg.n_grid[i] <= cfg.n_grid[i - 1])
            throw std::invalid_argument("run_experiment: n grid must be strictly increasing");
    }

    // Realized once per experiment, so the Dirichlet draw is fixed across trials.
    const Distribution dist = experiment_distribution(cfg);
    const double truth = exact_value(cfg.property, dist.probs);

    std::vector<ResultRow> rows;
    for (std::uint64_t n : cfg.n_grid) {
        for (EstimatorId id : cfg.estimators) {
            ResultRow row;
            row.property = std::string(to_string(cfg.property.kind()));
            row.distribution = std::string(to_string(cfg.family));
            row.k = cfg.k;
            row.n = n;
            row.estimator = std::string(to_string(id));
            row.trials = cfg.trials;
            row.true_value = truth;
            row.seed = cfg.seed;
            try {
                const std::vector<double> estimates = cell_estimates(cfg, dist, n, id);
                long double sum = 0.0L;
                for (double e : estimates)
                    sum += e;
                row.mean_estimate = static_cast<double>(sum / estimates.size());
                row.mse = mse(estimates, truth);
            } catch (const std::exception& e) {
                row.error = e.what();
                row.mse = std::numeric_limits<double>::quiet_NaN();
                row.mean_estimate = std::numeric_limits<double>::quiet_NaN();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline constexpr std::string_view kResultsHeader =
    "property,distribution,k,n,estimator,trials,mse,mean_estimate,true_value,seed";

//! Results CSV; failed cells carry nan in mse and mean_estimate.
inline void write_results_csv(std::ostream& os, std::span<const ResultRow> rows)
{
    os << kResultsHeader << '\n';
    char buf[512];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%zu,%llu,%s,%d,%.17g,%.17g,%.17g,%llu", row.property.c_str(),
                      row.distribution.c_str(), row.k, static_cast<unsigned long long>(row.n),
                      row.estimator.c_str(), row.trials, row.mse, row.mean_estimate, row.true_value,
                      static_cast<unsigned long long>(row.seed));
        os << buf << '\n';
    }
}

} // namespace ampest
