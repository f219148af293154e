#pragma once
//---------------------------------------------------------------------------//
//! \file ampest/estimators.hpp
//! Plug-in estimators and the amplified estimator f* = f*_S + f*_L.
//!
//! A symbol seen N'_x <= s0 times in the second stream is "small" and
//! contributes h_{x,N_x} N_x! from a precomputed coefficient table; every
//! other symbol contributes the modified plug-in value f_x(N_x / n).
//! The coefficients
//!
//!   h_{x,v} v! = sum_{u=1}^{min(u_max, v)} f_x(u / nt) t^u (t-1)^{v-u}
//!                C(v, u) (-1)^{v-u} P(Poi(r) > v + u)
//!
//! make the small part an unbiased estimate of a smoothed version of
//! E[f_x(Poi(n t p_x) / nt)], i.e. of the plug-in value on t times as
//! many samples.
//---------------------------------------------------------------------------//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "distributions.hpp"
#include "numerics.hpp"
#include "properties.hpp"

namespace ampest {

//---------------------------------------------------------------------------//
// Plug-in estimators
//---------------------------------------------------------------------------//

//! f^E: evaluate at N_x / N; 0 (plus offset) for an empty sample.
inline double empirical(const Histogram& hist, const PropertySpec& spec)
{
    if (hist.empty())
        return spec.report_offset();
    const long double total = static_cast<long double>(hist.total());
    long double sum = 0.0L;
    for (const auto& [x, c] : hist.entries())
        sum += eval_fx<long double>(spec, x, static_cast<long double>(c) / total);
    return static_cast<double>(sum + spec.report_offset());
}

//! f^ME: evaluate at N_x / n, with arguments above 1 clamped.
inline double modified_empirical(const Histogram& hist, double rate, const PropertySpec& spec)
{
    if (!(rate > 0))
        throw std::invalid_argument("modified_empirical: rate must be positive");
    long double sum = 0.0L;
    for (const auto& [x, c] : hist.entries())
        sum += eval_fx<long double>(spec, x, static_cast<long double>(c) / rate);
    return static_cast<double>(sum + spec.report_offset());
}

//---------------------------------------------------------------------------//
// Parameters
//---------------------------------------------------------------------------//

struct EstimatorParams
{
    //! Per-stream Poisson rate n.
    double rate = 0.0;
    //! Amplification factor.
    double t = 0.0;
    //! Small/large threshold on second-stream counts.
    std::int64_t s0 = 0;
    std::int64_t u_max = 0;
    //! Poisson-tail smoothing level.
    std::int64_t r = 0;
    //! Replace t by max(t / 1.5^{v-1}, 1.5) when computing h_{x,v}.
    bool t_decay = false;
    //! Largest count with a stored coefficient.
    std::int64_t v_max = 0;
    //! Hard cap on ln|h_v v!| for the clamp envelope.
    double log_coefficient_ceiling = 690.0;

    //! Derive u_max, r, v_max from (rate, t, s0) with round-half-up.
    static EstimatorParams make(double rate, double t, std::int64_t s0, bool t_decay, std::int64_t v_max = 0)
    {
        EstimatorParams p;
        p.rate = rate;
        p.t = t;
        p.s0 = s0;
        p.t_decay = t_decay;
        p.u_max = static_cast<std::int64_t>(std::floor(2.0 * s0 * t + 2.0 * s0 - 1.0 + 0.5));
        p.r = static_cast<std::int64_t>(std::floor(10.0 * s0 * t + 10.0 * s0 + 0.5));
        p.v_max = v_max > 0 ? v_max : std::max<std::int64_t>(4 * p.r, 200);
        p.validate();
        return p;
    }

    void validate() const
    {
        if (!(rate > 0) || !std::isfinite(rate))
            throw std::invalid_argument("estimator params: rate must be positive");
        if (!(t > 2.5) || !std::isfinite(t))
            throw std::invalid_argument("estimator params: amplification t must exceed 2.5 (got "
                                        + std::to_string(t) + ")");
        if (s0 < 0 || u_max < 1 || r < 1 || v_max < 1)
            throw std::invalid_argument("estimator params: need s0 >= 0 and u_max, r, v_max >= 1");
    }

    //! Amplification used for the coefficient of count v.
    double effective_t(std::int64_t v) const
    {
        if (!t_decay)
            return t;
        return std::max(t / std::pow(1.5, static_cast<double>(v - 1)), 1.5);
    }
};

//! How t and s0 are chosen from the sample size.
struct ParamChoice
{
    //! Use the tuned per-property row; otherwise t = log^{1-alpha} n + 1
    //! and s0 = round(s0_mult log^{0.2} n).
    bool preset = true;
    double alpha = 0.2;
    double s0_mult = 8.0;
};

struct PresetRow
{
    double t_scale;
    double t_power;
    double s0_scale;
};

//! Tuned t = t_scale log^{t_power} n + 1, s0 = s0_scale log^{0.2} n.
//! L1 borrows the uniformity row and KL the entropy row.
inline PresetRow preset_row(PropertyKind kind)
{
    switch (kind) {
    case PropertyKind::entropy:
    case PropertyKind::kl_divergence: return {2.0, 0.8, 16.0};
    case PropertyKind::support_size: return {1.0, 0.7, 16.0};
    case PropertyKind::support_coverage: return {1.0, 0.8, 8.0};
    case PropertyKind::power_sum: return {1.0, 1.0, 4.0};
    case PropertyKind::dist_to_uniform:
    case PropertyKind::l1_distance: return {1.0, 0.7, 4.0};
    }
    return {1.0, 0.7, 4.0};
}

//! Parameters for a total sampling budget `total_n`. The thinned split
//! halves the per-stream rate; t and s0 always use n = total_n.
inline EstimatorParams derive_params(double total_n, const PropertySpec& spec, const ParamChoice& choice,
                                     SplitMode split_mode, bool t_decay, std::int64_t v_max = 0)
{
    if (!(total_n >= 150))
        throw std::invalid_argument("derive_params: need at least 150 samples");
    const double log_n = std::log(total_n);
    double t = 0;
    double s0_real = 0;
    if (choice.preset) {
        const PresetRow row = preset_row(spec.kind());
        t = row.t_scale * std::pow(log_n, row.t_power) + 1.0;
        s0_real = row.s0_scale * std::pow(log_n, 0.2);
    } else {
        if (!(choice.alpha >= 0 && choice.alpha <= 1))
            throw std::invalid_argument("derive_params: alpha must lie in [0, 1]");
        if (!(choice.s0_mult > 0))
            throw std::invalid_argument("derive_params: s0 multiplier must be positive");
        t = std::pow(log_n, 1.0 - choice.alpha) + 1.0;
        s0_real = choice.s0_mult * std::pow(log_n, 0.2);
    }
    if (!(t > 2.5))
        throw std::invalid_argument("derive_params: derived t = " + std::to_string(t)
                                    + " does not exceed 2.5; increase n or lower alpha");
    const auto s0 = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(s0_real + 0.5)));
    const double rate = split_mode == SplitMode::thinned ? total_n / 2 : total_n;
    return EstimatorParams::make(rate, t, s0, t_decay, v_max);
}

//---------------------------------------------------------------------------//
// Coefficients
//---------------------------------------------------------------------------//

struct CoefficientValue
{
    //! h_v v! after clamping.
    double value = 0.0;
    //! Unclamped h_v v! in sign/log form.
    SignedLogValue raw;
    //! ln of the clamp envelope.
    long double log_bound = 0.0L;
    bool clamped = false;
    bool cancellation = false;

    double raw_value() const { return static_cast<double>(raw.to_real()); }
};

//! Evaluates h_{x,v} v! for one reference mass, with factorials and
//! Poisson tails precomputed up to a count limit.
class CoefficientKernel
{
  public:
    CoefficientKernel(const PropertySpec& spec, double reference_mass, const EstimatorParams& params,
                      std::int64_t v_limit)
        : spec_(spec), q_x_(reference_mass), params_(params), v_limit_(v_limit)
    {
        params_.validate();
        if (v_limit < 1)
            throw std::invalid_argument("CoefficientKernel: v_limit must be >= 1");
        const std::int64_t j_max = v_limit + params_.u_max;
        log_fact_.resize(static_cast<std::size_t>(j_max + 1));
        log_tail_.resize(static_cast<std::size_t>(j_max + 1));
        for (std::int64_t j = 0; j <= j_max; ++j) {
            log_fact_[j] = log_factorial(static_cast<std::uint64_t>(j));
            log_tail_[j] = log_poisson_tail(static_cast<long double>(params_.r), j);
        }
        floor_t_ = params_.t_decay ? 1.5 : params_.t;
        fill_log_f(floor_t_, floor_log_f_, floor_sign_f_);
    }

    std::int64_t v_limit() const { return v_limit_; }

    CoefficientValue operator()(std::int64_t v) const
    {
        if (v < 1 || v > v_limit_)
            throw std::out_of_range("coefficient index outside kernel range");
        const double t = params_.effective_t(v);
        const std::vector<long double>* log_f = &floor_log_f_;
        const std::vector<int>* sign_f = &floor_sign_f_;
        std::vector<long double> local_log_f;
        std::vector<int> local_sign_f;
        if (t != floor_t_) {
            fill_log_f(t, local_log_f, local_sign_f);
            log_f = &local_log_f;
            sign_f = &local_sign_f;
        }

        const long double log_t = std::log(static_cast<long double>(t));
        const long double log_t1 = std::log(static_cast<long double>(t) - 1.0L);
        const std::int64_t u_top = std::min(params_.u_max, v);
        std::vector<SignedLogValue> terms;
        terms.reserve(static_cast<std::size_t>(u_top));
        for (std::int64_t u = 1; u <= u_top; ++u) {
            const int s = (*sign_f)[u];
            if (s == 0)
                continue;
            const long double log_mag = (*log_f)[u] + u * log_t + (v - u) * log_t1 + log_fact_[v]
                                        - log_fact_[v - u] - log_fact_[u] + log_tail_[v + u];
            const int parity = ((v - u) % 2 == 0) ? 1 : -1;
            terms.push_back({s * parity, log_mag});
        }
        const AlternatingSum sum = alternating_sum(terms);

        CoefficientValue out;
        out.raw = sum.total;
        out.cancellation = sum.cancellation;
        out.log_bound = log_envelope(t);
        if (out.raw.sign != 0 && out.raw.log_magnitude > out.log_bound) {
            out.clamped = true;
            out.value = static_cast<double>(out.raw.sign * std::exp(out.log_bound));
        } else {
            out.value = static_cast<double>(out.raw.to_real());
        }
        return out;
    }

    //! ln[ l_f(1/nt) u_max/(nt) e^{2r(t-1)} ], capped at the ceiling.
    long double log_envelope(double t) const
    {
        const double nt = params_.rate * t;
        const double ell = lipschitz(spec_, std::min(1.0, 1.0 / nt));
        const long double log_env = std::log(static_cast<long double>(ell))
                                    + std::log(static_cast<long double>(params_.u_max) / nt)
                                    + 2.0L * params_.r * (static_cast<long double>(t) - 1.0L);
        return std::min<long double>(log_env, params_.log_coefficient_ceiling);
    }

    long double log_factorial_at(std::int64_t v) const { return log_fact_[static_cast<std::size_t>(v)]; }

  private:
    void fill_log_f(double t, std::vector<long double>& log_f, std::vector<int>& sign_f) const
    {
        // g_x(u) (t-1)^u / t^u = f_x(u / nt); the powers are added per term.
        log_f.assign(static_cast<std::size_t>(params_.u_max + 1), kNegInf);
        sign_f.assign(static_cast<std::size_t>(params_.u_max + 1), 0);
        const long double nt = static_cast<long double>(params_.rate) * t;
        const std::int64_t u_top = std::min(params_.u_max, v_limit_);
        for (std::int64_t u = 1; u <= u_top; ++u) {
            const long double f = eval_with_reference<long double>(spec_, q_x_, u / nt);
            if (f != 0) {
                log_f[u] = std::log(std::fabs(f));
                sign_f[u] = f > 0 ? 1 : -1;
            }
        }
    }

    const PropertySpec& spec_;
    double q_x_;
    EstimatorParams params_;
    std::int64_t v_limit_;
    std::vector<long double> log_fact_;
    std::vector<long double> log_tail_;
    double floor_t_ = 0.0;
    std::vector<long double> floor_log_f_;
    std::vector<int> floor_sign_f_;
};

//! h_{x,v} v! for a symbol with reference mass q_x (0 for symmetric kinds).
inline CoefficientValue coefficient(const PropertySpec& spec, double reference_mass, std::int64_t v,
                                    const EstimatorParams& params)
{
    return CoefficientKernel(spec, reference_mass, params, v)(v);
}

//! Cached h_v v! for v = 1..v_max and one reference mass.
struct CoefficientTable
{
    double reference_mass = 0.0;
    //! Index v; values[0] = 0.
    std::vector<double> values;
    std::vector<std::uint8_t> clamped;
    std::uint64_t clamp_count = 0;
    std::uint64_t cancellation_count = 0;

    std::int64_t v_max() const { return static_cast<std::int64_t>(values.size()) - 1; }

    double at(std::int64_t v) const { return values.at(static_cast<std::size_t>(v)); }
};

inline CoefficientTable build_coefficient_table(const PropertySpec& spec, const EstimatorParams& params,
                                                double reference_mass = 0.0)
{
    CoefficientKernel kernel(spec, reference_mass, params, params.v_max);
    CoefficientTable table;
    table.reference_mass = reference_mass;
    table.values.assign(static_cast<std::size_t>(params.v_max + 1), 0.0);
    table.clamped.assign(static_cast<std::size_t>(params.v_max + 1), 0);
    for (std::int64_t v = 1; v <= params.v_max; ++v) {
        const CoefficientValue c = kernel(v);
        table.values[v] = c.value;
        table.clamped[v] = c.clamped ? 1 : 0;
        table.clamp_count += c.clamped ? 1 : 0;
        table.cancellation_count += c.cancellation ? 1 : 0;
    }
    return table;
}

//! All tables needed by one property: a single shared table for symmetric
//! kinds, one per distinct reference mass otherwise.
class CoefficientBank
{
  public:
    CoefficientBank(const PropertySpec& spec, const EstimatorParams& params) : params_(params)
    {
        if (spec.symmetric()) {
            tables_.push_back(build_coefficient_table(spec, params));
            return;
        }
        for (double q_x : spec.q()) {
            // Observing a symbol with q_x = 0 makes KL infinite; no table.
            if (spec.kind() == PropertyKind::kl_divergence && q_x == 0)
                continue;
            if (index_.count(q_x))
                continue;
            index_.emplace(q_x, tables_.size());
            tables_.push_back(build_coefficient_table(spec, params, q_x));
        }
    }

    const EstimatorParams& params() const { return params_; }
    std::size_t size() const { return tables_.size(); }
    const std::vector<CoefficientTable>& tables() const { return tables_; }

    const CoefficientTable& for_mass(double q_x) const
    {
        if (index_.empty())
            return tables_.front();
        auto it = index_.find(q_x);
        if (it == index_.end())
            throw std::domain_error("no coefficient table for reference mass " + std::to_string(q_x));
        return tables_[it->second];
    }

  private:
    EstimatorParams params_;
    std::vector<CoefficientTable> tables_;
    std::map<double, std::size_t> index_;
};

//! Audit dump: v,h_v_times_vfact,clamped
inline void write_coefficient_csv(std::ostream& os, const CoefficientTable& table)
{
    os << "v,h_v_times_vfact,clamped\n";
    char buf[64];
    for (std::int64_t v = 1; v <= table.v_max(); ++v) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%d", static_cast<long long>(v), table.values[v],
                      static_cast<int>(table.clamped[v]));
        os << buf << '\n';
    }
}

//---------------------------------------------------------------------------//
// Amplified estimator
//---------------------------------------------------------------------------//

struct AmplifiedEstimate
{
    //! small_part + large_part + report offset
    double value = 0.0;
    double small_part = 0.0;
    double large_part = 0.0;
    std::size_t small_symbols = 0;
    std::size_t large_symbols = 0;
    //! Small symbols with N_x > v_max (contributed 0).
    std::uint64_t overflow_count = 0;
    //! Small symbols whose coefficient hit the clamp.
    std::uint64_t clamped_hits = 0;
};

inline AmplifiedEstimate amplified_estimate(const SplitSample& sample, const PropertySpec& spec,
                                            const CoefficientBank& bank)
{
    const EstimatorParams& params = bank.params();
    if (std::fabs(sample.rate - params.rate) > 1e-9 * params.rate)
        throw std::invalid_argument("amplified_estimate: sample rate " + std::to_string(sample.rate)
                                    + " differs from parameter rate " + std::to_string(params.rate));

    // Symbols unseen in the first stream contribute f_x(0) = 0 or h_0 = 0.
    AmplifiedEstimate out;
    long double small = 0.0L;
    long double large = 0.0L;
    for (const auto& [x, n_x] : sample.first.entries()) {
        const std::uint64_t n2_x = sample.second.count(x);
        if (n2_x <= static_cast<std::uint64_t>(params.s0)) {
            ++out.small_symbols;
            const CoefficientTable& table = bank.for_mass(spec.reference_mass(x));
            if (n_x > static_cast<std::uint64_t>(table.v_max())) {
                ++out.overflow_count;
                continue;
            }
            small += table.values[n_x];
            out.clamped_hits += table.clamped[n_x];
        } else {
            ++out.large_symbols;
            large += eval_fx<long double>(spec, x, static_cast<long double>(n_x) / params.rate);
        }
    }
    out.small_part = static_cast<double>(small);
    out.large_part = static_cast<double>(large);
    out.value = static_cast<double>(small + large + spec.report_offset());
    return out;
}

inline AmplifiedEstimate amplified_estimate(const SplitSample& sample, const PropertySpec& spec,
                                            const EstimatorParams& params)
{
    return amplified_estimate(sample, spec, CoefficientBank(spec, params));
}

//---------------------------------------------------------------------------//
// Smoothed target (oracle)
//---------------------------------------------------------------------------//

struct SmoothedHHat
{
    //! e^{-lambda} sum_{v=1}^{V} h_v lambda^v
    double series = 0.0;
    //! e^{-lambda} sum_u g(u)/u! int_0^r e^{-a} a^u f_u(a lambda (t-1)) da
    double quadrature = 0.0;
    //! sum_{v=1}^{V} Poi(lambda){v} h_v v!
    double poisson_weighted = 0.0;
    std::int64_t terms = 0;
};

//! Smallest V whose envelope-weighted Poisson tail drops below `tail_tol`.
inline std::int64_t hhat_series_length(const CoefficientKernel& kernel, double t, double lambda,
                                       double tail_tol = 1e-9)
{
    const long double log_env = kernel.log_envelope(t);
    const long double target = std::log(static_cast<long double>(tail_tol));
    std::int64_t v = 1;
    while (log_env + log_poisson_tail(lambda, v) >= target)
        ++v;
    return v;
}

//! Two independent evaluations of the smoothed h-function, plus the
//! Poisson-weighted coefficient sum. Requires t_decay off.
inline SmoothedHHat smoothed_h_hat(const PropertySpec& spec, double reference_mass, double lambda,
                                   const EstimatorParams& params, double coefficient_sign = 1.0)
{
    if (params.t_decay)
        throw std::invalid_argument("smoothed_h_hat: identity requires a constant t (t_decay off)");
    if (!(lambda >= 0))
        throw std::invalid_argument("smoothed_h_hat: lambda must be nonnegative");
    SmoothedHHat out;
    if (lambda == 0)
        return out;

    const double t = params.t;
    std::int64_t length = 0;
    {
        CoefficientKernel probe(spec, reference_mass, params, 1);
        length = hhat_series_length(probe, t, lambda);
    }
    CoefficientKernel kernel(spec, reference_mass, params, length);
    out.terms = length;

    const long double log_lambda = std::log(static_cast<long double>(lambda));
    std::vector<SignedLogValue> series_terms;
    long double weighted = 0.0L;
    for (std::int64_t v = 1; v <= length; ++v) {
        SignedLogValue c = kernel(v).raw;
        if (coefficient_sign < 0)
            c = c.negated();
        if (c.sign == 0)
            continue;
        const long double log_poisson = -lambda + v * log_lambda - kernel.log_factorial_at(v);
        series_terms.push_back({c.sign, c.log_magnitude + log_poisson});
        weighted += std::exp(log_poisson) * c.to_real();
    }
    out.series = alternating_sum(series_terms).value();
    out.poisson_weighted = static_cast<double>(weighted);

    const double y = lambda * (t - 1.0);
    long double quad = 0.0L;
    const long double nt = static_cast<long double>(params.rate) * t;
    for (std::int64_t u = 1; u <= params.u_max; ++u) {
        const long double f = eval_with_reference<long double>(spec, reference_mass, u / nt);
        if (f == 0)
            continue;
        const long double g_over_fact =
            f * std::exp(u * std::log(static_cast<long double>(t) / (t - 1.0L)) - log_factorial(u));
        const auto integral = integrate_exp_poly_bessel(static_cast<int>(u), y, static_cast<double>(params.r));
        quad += g_over_fact * integral.value;
    }
    out.quadrature = static_cast<double>(std::exp(-static_cast<long double>(lambda)) * quad);
    return out;
}

} // namespace ampest
