#pragma once
//---------------------------------------------------------------------------//
//! \file ampest/properties.hpp
//! Additive distribution properties f(p) = sum_x f_x(p_x), written in the
//! offset form with f_x(0) = 0 so that unseen symbols contribute nothing.
//---------------------------------------------------------------------------//

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ampest {

enum class PropertyKind
{
    entropy,
    support_size,
    support_coverage,
    power_sum,
    dist_to_uniform,
    l1_distance,
    kl_divergence,
};

inline std::string_view to_string(PropertyKind kind)
{
    switch (kind) {
    case PropertyKind::entropy: return "entropy";
    case PropertyKind::support_size: return "support_size";
    case PropertyKind::support_coverage: return "coverage";
    case PropertyKind::power_sum: return "power_sum";
    case PropertyKind::dist_to_uniform: return "dist_to_uniform";
    case PropertyKind::l1_distance: return "l1";
    case PropertyKind::kl_divergence: return "kl";
    }
    return "unknown";
}

inline PropertyKind parse_property_kind(std::string_view name)
{
    if (name == "entropy") return PropertyKind::entropy;
    if (name == "support_size" || name == "support") return PropertyKind::support_size;
    if (name == "coverage" || name == "support_coverage") return PropertyKind::support_coverage;
    if (name == "power_sum") return PropertyKind::power_sum;
    if (name == "dist_to_uniform" || name == "uniformity") return PropertyKind::dist_to_uniform;
    if (name == "l1" || name == "l1_distance") return PropertyKind::l1_distance;
    if (name == "kl" || name == "kl_divergence") return PropertyKind::kl_divergence;
    throw std::invalid_argument("unknown property '" + std::string(name) + "'");
}

namespace detail {

inline void check_probability_vector(std::span<const double> p, const char* what)
{
    long double sum = 0.0L;
    for (double v : p) {
        if (!(v >= 0) || !std::isfinite(v))
            throw std::invalid_argument(std::string(what) + ": entries must be finite and nonnegative");
        sum += v;
    }
    if (p.empty() || std::fabs(sum - 1.0L) > 1e-12L)
        throw std::invalid_argument(std::string(what) + ": probabilities must sum to 1");
}

} // namespace detail

//! Immutable description of one additive property.
class PropertySpec
{
  public:
    static PropertySpec entropy() { return PropertySpec(PropertyKind::entropy); }

    static PropertySpec support_size(std::size_t k)
    {
        PropertySpec spec(PropertyKind::support_size);
        spec.set_k(k);
        return spec;
    }

    static PropertySpec support_coverage(double m)
    {
        if (!(m > 0) || !std::isfinite(m))
            throw std::invalid_argument("support coverage: horizon m must be positive");
        PropertySpec spec(PropertyKind::support_coverage);
        spec.m_ = m;
        return spec;
    }

    //! Exponents below 1 are accepted (the experiment preset uses 0.75).
    static PropertySpec power_sum(double a)
    {
        if (!(a > 0) || !std::isfinite(a))
            throw std::invalid_argument("power sum: exponent a must be positive");
        PropertySpec spec(PropertyKind::power_sum);
        spec.a_ = a;
        return spec;
    }

    static PropertySpec dist_to_uniform(std::size_t k)
    {
        PropertySpec spec(PropertyKind::dist_to_uniform);
        spec.set_k(k);
        return spec;
    }

    static PropertySpec l1_distance(std::vector<double> q)
    {
        return with_reference(PropertyKind::l1_distance, std::move(q));
    }

    static PropertySpec kl_divergence(std::vector<double> q)
    {
        return with_reference(PropertyKind::kl_divergence, std::move(q));
    }

    PropertyKind kind() const { return kind_; }
    std::size_t k() const { return k_; }
    double m() const { return m_; }
    double a() const { return a_; }
    std::span<const double> q() const { return q_; }

    //! True when f_x does not depend on x.
    bool symmetric() const
    {
        return kind_ != PropertyKind::l1_distance && kind_ != PropertyKind::kl_divergence;
    }

    //! Added to internal estimates when reporting: +1 restores the sum of
    //! q_x removed by the |p - q| - q offset form.
    double report_offset() const
    {
        return (kind_ == PropertyKind::dist_to_uniform || kind_ == PropertyKind::l1_distance) ? 1.0 : 0.0;
    }

    //! q_x for the reference-based kinds, 0 for symmetric kinds.
    double reference_mass(std::size_t x) const
    {
        if (symmetric())
            return 0.0;
        if (x >= q_.size())
            throw std::out_of_range("symbol index " + std::to_string(x) + " outside reference distribution");
        return q_[x];
    }

    //! Smallest positive reference mass (KL smoothness constant).
    double min_positive_reference_mass() const
    {
        double best = std::numeric_limits<double>::infinity();
        for (double v : q_) {
            if (v > 0)
                best = std::min(best, v);
        }
        return best;
    }

  private:
    explicit PropertySpec(PropertyKind kind) : kind_(kind) {}

    void set_k(std::size_t k)
    {
        if (k == 0)
            throw std::invalid_argument("support size k must be positive");
        k_ = k;
    }

    static PropertySpec with_reference(PropertyKind kind, std::vector<double> q)
    {
        detail::check_probability_vector(q, "reference distribution q");
        PropertySpec spec(kind);
        spec.k_ = q.size();
        spec.q_ = std::move(q);
        return spec;
    }

    PropertyKind kind_;
    std::size_t k_ = 1;
    double m_ = 1.0;
    double a_ = 2.0;
    std::vector<double> q_;
};

//---------------------------------------------------------------------------//
// Per-symbol evaluation
//---------------------------------------------------------------------------//

//! f_x(p) for a symbol whose reference mass is q_x (ignored by symmetric
//! kinds). Arguments above 1 are clamped to 1.
template<class Real>
Real eval_with_reference(const PropertySpec& spec, double q_x, Real p)
{
    if (!(p >= 0))
        throw std::invalid_argument("property argument must be nonnegative");
    if (p > 1)
        p = 1;

    using std::exp;
    using std::fabs;
    using std::log;
    using std::pow;
    switch (spec.kind()) {
    case PropertyKind::entropy:
        return p == 0 ? Real(0) : -p * log(p);
    case PropertyKind::support_size:
        return p > 0 ? Real(1) / Real(spec.k()) : Real(0);
    case PropertyKind::support_coverage: {
        const Real m = spec.m();
        return -std::expm1(-m * p) / m;
    }
    case PropertyKind::power_sum:
        return p == 0 ? Real(0) : pow(p, Real(spec.a()));
    case PropertyKind::dist_to_uniform: {
        const Real inv_k = Real(1) / Real(spec.k());
        return fabs(p - inv_k) - inv_k;
    }
    case PropertyKind::l1_distance: {
        const Real q = q_x;
        return fabs(p - q) - q;
    }
    case PropertyKind::kl_divergence:
        if (p == 0)
            return Real(0);
        if (q_x <= 0)
            throw std::domain_error("KL divergence undefined: p_x > 0 where q_x = 0");
        return p * log(p / Real(q_x));
    }
    return Real(0);
}

template<class Real>
Real eval_fx(const PropertySpec& spec, std::size_t x, Real p)
{
    return eval_with_reference<Real>(spec, spec.reference_mass(x), p);
}

inline double eval_fx(const PropertySpec& spec, std::size_t x, double p)
{
    return eval_fx<double>(spec, x, p);
}

//! sum_x f_x(p_x) + report_offset
inline double exact_value(const PropertySpec& spec, std::span<const double> p)
{
    detail::check_probability_vector(p, "exact_value");
    if (!spec.symmetric() && p.size() != spec.q().size())
        throw std::invalid_argument("exact_value: distribution and reference q differ in dimension");
    if (spec.kind() == PropertyKind::dist_to_uniform && p.size() != spec.k())
        throw std::invalid_argument("exact_value: distribution size differs from k");

    long double sum = 0.0L;
    for (std::size_t x = 0; x < p.size(); ++x)
        sum += eval_fx<long double>(spec, x, p[x]);
    return static_cast<double>(sum + spec.report_offset());
}

//---------------------------------------------------------------------------//
// Smoothness
//---------------------------------------------------------------------------//

//! Largest slope of f_x between points whose maximum is at least h.
inline double lipschitz(const PropertySpec& spec, double h)
{
    if (!(h > 0) || h > 1)
        throw std::invalid_argument("lipschitz: h must lie in (0, 1]");
    switch (spec.kind()) {
    case PropertyKind::entropy:
        return -std::log(h);
    case PropertyKind::kl_divergence:
        return -std::log(h * spec.min_positive_reference_mass());
    case PropertyKind::support_size:
        return std::min(1.0, 1.0 / (static_cast<double>(spec.k()) * h));
    case PropertyKind::power_sum:
        return spec.a() >= 1 ? 1.0 : std::pow(h, spec.a() - 1.0);
    case PropertyKind::support_coverage:
    case PropertyKind::dist_to_uniform:
    case PropertyKind::l1_distance:
        return 1.0;
    }
    return 1.0;
}

//! Second-order constant S_f with omega_f^2(h) <= S_f h.
inline double smoothness_constant(const PropertySpec& spec)
{
    switch (spec.kind()) {
    case PropertyKind::entropy:
    case PropertyKind::kl_divergence:
        return std::numbers::ln2;
    case PropertyKind::power_sum:
        return spec.a();
    default:
        return 1.0;
    }
}

} // namespace ampest
