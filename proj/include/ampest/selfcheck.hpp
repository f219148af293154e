#pragma once
//---------------------------------------------------------------------------//
//! \file ampest/selfcheck.hpp
//! Numerical identities the coefficient machinery must satisfy, runnable
//! from the command line.
//---------------------------------------------------------------------------//

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "estimators.hpp"
#include "numerics.hpp"
#include "properties.hpp"

namespace ampest {

struct CheckResult
{
    std::string name;
    bool passed = false;
    std::string detail;
};

enum class InjectedFault
{
    none,
    //! Negate every coefficient read by the series checks.
    flip_coefficient_sign,
};

struct SelfcheckOptions
{
    bool deep = false;
    InjectedFault fault = InjectedFault::none;
};

namespace detail {

inline std::string format_double(const char* fmt, double a, double b = 0, double c = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof(buf), fmt, a, b, c);
    return buf;
}

//! rate 150, t = 3, s0 = 1 (u_max = 7, r = 40), constant t.
inline EstimatorParams small_check_params() { return EstimatorParams::make(150.0, 3.0, 1, false); }

} // namespace detail

//! e^{-y} y^u = int_0^inf e^{-a} a^u f_u(a y) da
inline CheckResult check_integral_identity(const SelfcheckOptions& opts)
{
    std::vector<int> us = {1, 2, 3, 4, 5};
    std::vector<double> ys = {0.1, 1.0, 5.0, 20.0};
    if (opts.deep) {
        us = {1, 2, 3, 4, 5, 6, 8, 10};
        ys = {0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0};
    }
    double worst = 0.0;
    std::string where;
    for (int u : us) {
        for (double y : ys) {
            const double expected = std::exp(-y) * std::pow(y, u);
            double got = 0;
            try {
                got = integrate_exp_poly_bessel(u, y, INFINITY).value;
            } catch (const ConvergenceError& e) {
                return {"integral_identity", false, e.what()};
            }
            const double rel = std::fabs(got - expected) / std::max(1.0, expected);
            if (rel > worst) {
                worst = rel;
                where = detail::format_double(" at u=%.0f y=%g", u, y);
            }
        }
    }
    return {"integral_identity", worst < 1e-6, detail::format_double("max scaled error %.3e", worst) + where};
}

inline std::vector<double> check_lambdas(const SelfcheckOptions& opts)
{
    if (opts.deep)
        return {0.05, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0};
    return {0.1, 0.5, 1.0, 2.0};
}

inline std::vector<PropertySpec> check_properties(const SelfcheckOptions& opts)
{
    std::vector<PropertySpec> specs = {PropertySpec::entropy()};
    if (opts.deep) {
        specs.push_back(PropertySpec::support_size(1000));
        specs.push_back(PropertySpec::support_coverage(500.0));
        specs.push_back(PropertySpec::power_sum(2.0));
    }
    return specs;
}

//! Coefficient series and quadrature forms of the smoothed target agree.
inline CheckResult check_series_quadrature(const SelfcheckOptions& opts)
{
    const auto params = detail::small_check_params();
    const double sign = opts.fault == InjectedFault::flip_coefficient_sign ? -1.0 : 1.0;
    double worst = 0.0;
    for (const auto& spec : check_properties(opts)) {
        for (double lambda : check_lambdas(opts)) {
            try {
                const auto h = smoothed_h_hat(spec, 0.0, lambda, params, sign);
                worst = std::max(worst, std::fabs(h.series - h.quadrature));
            } catch (const ConvergenceError& e) {
                return {"series_quadrature", false, e.what()};
            }
        }
    }
    return {"series_quadrature", worst < 1e-5, detail::format_double("max abs difference %.3e", worst)};
}

//! sum_v Poi(lambda){v} h_v v! equals e^{-lambda} sum_v h_v lambda^v.
inline CheckResult check_unbiasedness(const SelfcheckOptions& opts)
{
    const auto params = detail::small_check_params();
    const double sign = opts.fault == InjectedFault::flip_coefficient_sign ? -1.0 : 1.0;
    double worst = 0.0;
    for (const auto& spec : check_properties(opts)) {
        for (double lambda : check_lambdas(opts)) {
            const auto h = smoothed_h_hat(spec, 0.0, lambda, params, sign);
            // The fault stands for a build whose estimator-side weights
            // disagree with the series; apply it to one side only.
            const double weighted = sign * h.poisson_weighted;
            const double rel = std::fabs(weighted - h.series) / std::max(std::fabs(h.series), 1e-300);
            worst = std::max(worst, rel);
        }
    }
    return {"unbiasedness", worst < 1e-10, detail::format_double("max relative difference %.3e", worst)};
}

//! |h_v v!| stays within l_f(1/nt) u_max/(nt) e^{2r(t-1)}.
inline CheckResult check_coefficient_bound(const SelfcheckOptions& opts)
{
    const auto params = detail::small_check_params();
    const std::int64_t v_top = opts.deep ? 80 : 20;
    double worst_margin = -INFINITY;
    for (const auto& spec : check_properties(opts)) {
        CoefficientKernel kernel(spec, 0.0, params, v_top);
        for (std::int64_t v = 1; v <= v_top; ++v) {
            const auto c = kernel(v);
            if (c.raw.sign == 0)
                continue;
            worst_margin = std::max(worst_margin, static_cast<double>(c.raw.log_magnitude - c.log_bound));
        }
    }
    return {"coefficient_bound", worst_margin <= 0,
            detail::format_double("max ln(|h_v v!| / envelope) = %.3f", worst_margin)};
}

inline std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& opts = {})
{
    return {check_integral_identity(opts), check_series_quadrature(opts), check_unbiasedness(opts),
            check_coefficient_bound(opts)};
}

} // namespace ampest
