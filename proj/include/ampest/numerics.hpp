#pragma once
//---------------------------------------------------------------------------//
//! \file ampest/numerics.hpp
//! Log-space factorials and Poisson tails, signed log-magnitude summation,
//! the J_{2u}(2 sqrt y) Bessel series and adaptive Gauss-Kronrod quadrature.
//---------------------------------------------------------------------------//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ampest {

//! Thrown when an iterative routine exhausts its budget before reaching
//! the requested tolerance.
class ConvergenceError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr long double kNegInf = -std::numeric_limits<long double>::infinity();

//---------------------------------------------------------------------------//
// Factorials and Poisson tails
//---------------------------------------------------------------------------//

//! ln(v!)
inline long double log_factorial(std::uint64_t v)
{
    if (v < 2)
        return 0.0L;
    return std::lgamma(static_cast<long double>(v) + 1.0L);
}

//! ln P(Poi(r) > j). Returns 0 for j < 0 and -inf when the tail is empty.
inline long double log_poisson_tail(long double r, std::int64_t j)
{
    if (r < 0 || std::isnan(r))
        throw std::invalid_argument("poisson_tail: rate must be nonnegative");
    if (j < 0)
        return 0.0L;
    if (r == 0)
        return kNegInf;

    const long double log_r = std::log(r);
    auto log_pmf = [&](std::int64_t i) {
        return -r + static_cast<long double>(i) * log_r - log_factorial(static_cast<std::uint64_t>(i));
    };

    if (static_cast<long double>(j + 1) > r) {
        // Upper tail: terms decrease geometrically past the mode.
        const long double lead = log_pmf(j + 1);
        long double sum = 1.0L;
        long double term = 1.0L;
        for (std::int64_t i = j + 2; i < j + 2 + 100000; ++i) {
            term *= r / static_cast<long double>(i);
            sum += term;
            if (term < 1e-22L * sum)
                break;
        }
        return lead + std::log(sum);
    }

    // Lower CDF summed downward from j, then complemented.
    const long double lead = log_pmf(j);
    long double sum = 1.0L;
    long double term = 1.0L;
    for (std::int64_t i = j; i > 0; --i) {
        term *= static_cast<long double>(i) / r;
        sum += term;
        if (term < 1e-22L * sum)
            break;
    }
    const long double log_cdf = lead + std::log(sum);
    return std::log1p(-std::exp(log_cdf));
}

//! P(Poi(r) > j) = 1 - e^{-r} sum_{i<=j} r^i / i!
inline double poisson_tail(double r, std::int64_t j)
{
    return static_cast<double>(std::exp(log_poisson_tail(r, j)));
}

//---------------------------------------------------------------------------//
// Signed log-magnitude values
//---------------------------------------------------------------------------//

struct SignedLogValue
{
    int sign = 0;
    long double log_magnitude = kNegInf;

    static SignedLogValue from_real(long double x)
    {
        if (x == 0)
            return {};
        return {x > 0 ? 1 : -1, std::log(std::fabs(x))};
    }

    long double to_real() const
    {
        if (sign == 0)
            return 0.0L;
        return static_cast<long double>(sign) * std::exp(log_magnitude);
    }

    SignedLogValue negated() const { return {-sign, log_magnitude}; }

    friend bool operator==(const SignedLogValue&, const SignedLogValue&) = default;
};

struct AlternatingSum
{
    SignedLogValue total;
    //! |total| < 1e-10 * largest |term|
    bool cancellation = false;

    double value() const { return static_cast<double>(total.to_real()); }
};

//! Sum signed log-magnitude terms: positives and negatives are accumulated
//! separately relative to the largest magnitude, then differenced.
inline AlternatingSum alternating_sum(std::span<const SignedLogValue> terms)
{
    long double top = kNegInf;
    for (const auto& term : terms) {
        if (term.sign != 0)
            top = std::max(top, term.log_magnitude);
    }
    if (top == kNegInf)
        return {};

    long double positive = 0.0L;
    long double negative = 0.0L;
    for (const auto& term : terms) {
        if (term.sign > 0)
            positive += std::exp(term.log_magnitude - top);
        else if (term.sign < 0)
            negative += std::exp(term.log_magnitude - top);
    }
    const long double diff = positive - negative;

    AlternatingSum result;
    result.cancellation = std::fabs(diff) < 1e-10L;
    if (diff != 0)
        result.total = {diff > 0 ? 1 : -1, top + std::log(std::fabs(diff))};
    return result;
}

//---------------------------------------------------------------------------//
// Bessel series f_u(y) = J_{2u}(2 sqrt(y))
//---------------------------------------------------------------------------//

struct BesselValue
{
    double value = 0.0;
    //! Series abandoned (term cap or cancellation) and the library
    //! cylindrical Bessel function used instead.
    bool fallback = false;
};

inline constexpr int kBesselTermCap = 500;

//! f_u(y) = sum_i (-1)^i y^{i+u} / (i! (i+2u)!)
inline BesselValue bessel_f(int u, double y)
{
    if (u < 1)
        throw std::invalid_argument("bessel_f: order u must be >= 1");
    if (y < 0 || std::isnan(y))
        throw std::invalid_argument("bessel_f: argument must be nonnegative");
    if (y == 0)
        return {};

    const long double yl = y;
    const long double two_u = 2.0L * u;
    long double term = std::exp(u * std::log(yl) - log_factorial(static_cast<std::uint64_t>(2 * u)));
    long double sum = term;
    long double running_max = std::fabs(term);
    bool converged = false;
    for (int i = 0; i < kBesselTermCap; ++i) {
        const long double ratio = yl / ((i + 1.0L) * (i + 1.0L + two_u));
        term *= -ratio;
        sum += term;
        running_max = std::max(running_max, std::fabs(term));
        if (ratio < 1 && std::fabs(term) < 1e-16L * running_max) {
            converged = true;
            break;
        }
    }

    // Beyond ~1e6 peak term the long-double series keeps < 12 digits.
    if (converged && running_max < 1e6L)
        return {static_cast<double>(sum), false};
    return {std::cyl_bessel_j(2.0 * u, 2.0 * std::sqrt(y)), true};
}

//---------------------------------------------------------------------------//
// Adaptive Gauss-Kronrod (7/15) quadrature
//---------------------------------------------------------------------------//

struct QuadratureResult
{
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = false;
    int panels = 0;
};

namespace detail {

struct Panel
{
    double a;
    double b;
    double value;
    double error;

    bool operator<(const Panel& other) const { return error < other.error; }
};

template<class F>
Panel gauss_kronrod_15(F& f, double a, double b)
{
    static constexpr double xgk[8] = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
    static constexpr double wgk[8] = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static constexpr double wg[4] = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * wgk[7];
    double gauss = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * xgk[j];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += wgk[j] * pair;
        if (j % 2 == 1)
            gauss += wg[j / 2] * pair;
    }
    return {a, b, kronrod * half, std::fabs((kronrod - gauss) * half)};
}

} // namespace detail

//! Integrate f over [a, b] to an absolute tolerance by repeatedly bisecting
//! the panel with the largest error estimate.
template<class F>
QuadratureResult integrate_adaptive(F f, double a, double b, double abs_tol, int max_panels = 4000)
{
    std::priority_queue<detail::Panel> panels;
    panels.push(detail::gauss_kronrod_15(f, a, b));
    double total = panels.top().value;
    double error = panels.top().error;

    while (error > abs_tol && static_cast<int>(panels.size()) < max_panels) {
        const detail::Panel worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const auto left = detail::gauss_kronrod_15(f, worst.a, mid);
        const auto right = detail::gauss_kronrod_15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
    }

    // Re-sum to shed drift from the incremental updates.
    QuadratureResult result;
    result.panels = static_cast<int>(panels.size());
    while (!panels.empty()) {
        result.value += panels.top().value;
        result.error_estimate += panels.top().error;
        panels.pop();
    }
    result.converged = result.error_estimate <= abs_tol;
    return result;
}

inline constexpr double kQuadratureTolerance = 1e-9;

//! Integral of e^{-a} a^u f_u(a y) over [0, upper]; upper may be +inf, in
//! which case [0, u + y + 50] is integrated and the remainder bounded by
//! the incomplete gamma tail of e^{-a} a^u (|f_u| <= 1).
inline QuadratureResult integrate_exp_poly_bessel(int u, double y, double upper,
                                                  double abs_tol = kQuadratureTolerance,
                                                  int max_panels = 4000)
{
    if (u < 1)
        throw std::invalid_argument("integrate_exp_poly_bessel: u must be >= 1");
    if (y < 0 || !(upper > 0))
        throw std::invalid_argument("integrate_exp_poly_bessel: need y >= 0 and upper > 0");

    auto integrand = [u, y](double alpha) {
        if (alpha <= 0)
            return 0.0;
        const double weight = std::exp(-alpha + u * std::log(alpha));
        return weight * bessel_f(u, alpha * y).value;
    };

    double tail_bound = 0.0;
    double finite_upper = upper;
    if (std::isinf(upper)) {
        finite_upper = u + y + 50.0;
        // int_A^inf e^{-a} a^u da = u! P(Poi(A) <= u)
        auto tail_at = [u](double A) {
            const long double log_cdf = std::log1p(-std::exp(log_poisson_tail(A, u)));
            return static_cast<double>(std::exp(log_factorial(static_cast<std::uint64_t>(u)) + log_cdf));
        };
        tail_bound = tail_at(finite_upper);
        while (tail_bound > 0.1 * abs_tol) {
            finite_upper *= 2;
            tail_bound = tail_at(finite_upper);
        }
    }

    auto result = integrate_adaptive(integrand, 0.0, finite_upper, abs_tol - tail_bound, max_panels);
    result.error_estimate += tail_bound;
    result.converged = result.error_estimate <= abs_tol;
    if (!result.converged) {
        throw ConvergenceError("integrate_exp_poly_bessel: tolerance not reached (u=" + std::to_string(u)
                               + ", y=" + std::to_string(y) + ", error="
                               + std::to_string(result.error_estimate) + ")");
    }
    return result;
}

} // namespace ampest
