#pragma once
//---------------------------------------------------------------------------//
//! \file tools/cli.hpp
//! Subcommands of the `ampest` tool: simulate, estimate, coeffs, selfcheck.
//! Exit codes: 0 success, 1 usage error, 2 runtime or check failure.
//---------------------------------------------------------------------------//

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ampest/ampest.hpp"
#include "ampest/counts_file.hpp"

namespace ampest::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr std::uint64_t kDefaultSeed = 20190101;

//! Raised for flag combinations CLI11 cannot express.
class UsageError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

//! "1000,3162,10000" or "lo:hi:points" (log10-spaced, rounded).
inline std::vector<std::uint64_t> parse_n_grid(const std::string& text)
{
    std::vector<std::uint64_t> grid;
    auto parse_number = [&](const std::string& token) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception&) {
            throw UsageError("malformed n grid '" + text + "'");
        }
        if (used != token.size() || !(v >= 1) || !std::isfinite(v))
            throw UsageError("malformed n grid '" + text + "'");
        return v;
    };

    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string part; std::getline(ss, part, ':');)
            parts.push_back(part);
        if (parts.size() != 3)
            throw UsageError("n grid range must be lo:hi:points");
        const double lo = parse_number(parts[0]);
        const double hi = parse_number(parts[1]);
        const double points = parse_number(parts[2]);
        if (points != std::floor(points) || hi <= lo || points < 2)
            throw UsageError("n grid range needs lo < hi and an integer point count >= 2");
        const int count = static_cast<int>(points);
        for (int i = 0; i < count; ++i) {
            const double e = std::log10(lo) + (std::log10(hi) - std::log10(lo)) * i / (count - 1);
            grid.push_back(static_cast<std::uint64_t>(std::llround(std::pow(10.0, e))));
        }
    } else {
        std::stringstream ss(text);
        for (std::string part; std::getline(ss, part, ',');) {
            const double v = parse_number(part);
            if (v != std::floor(v))
                throw UsageError("n grid values must be integers");
            grid.push_back(static_cast<std::uint64_t>(v));
        }
    }
    if (grid.empty())
        throw UsageError("empty n grid");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] <= grid[i - 1])
            throw UsageError("n grid must be strictly increasing");
    }
    return grid;
}

//! Property flags shared by every subcommand.
struct PropertyFlags
{
    std::string name = "entropy";
    std::size_t k = 0;
    double m = 5000.0;
    double a = 2.0;
    std::string q_file;
    std::string q_shorthand;

    void add_to(CLI::App& app, bool name_required)
    {
        auto* opt = app.add_option("--property", name,
                                   "entropy|support_size|coverage|power_sum|dist_to_uniform|l1|kl");
        if (name_required)
            opt->required();
        app.add_option("--k", k, "Support size (normalizer for support_size/dist_to_uniform)");
        app.add_option("--m", m, "Coverage horizon m")->capture_default_str();
        app.add_option("--a", a, "Power-sum exponent a")->capture_default_str();
        app.add_option("--q-file", q_file, "Reference distribution q for l1/kl, one probability per line");
        app.add_option("--q", q_shorthand, "Reference distribution shorthand: 'uniform' (needs --k)")
            ->check(CLI::IsMember({"uniform"}));
    }

    std::vector<double> reference() const
    {
        if (!q_file.empty() && !q_shorthand.empty())
            throw UsageError("--q-file and --q are mutually exclusive");
        if (!q_file.empty())
            return read_probabilities_file(q_file);
        if (q_shorthand == "uniform") {
            if (k == 0)
                throw UsageError("--q uniform needs --k");
            return std::vector<double>(k, 1.0 / static_cast<double>(k));
        }
        throw UsageError("property '" + name + "' needs --q-file or --q uniform");
    }

    PropertySpec build() const
    {
        PropertyKind kind{};
        try {
            kind = parse_property_kind(name);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        switch (kind) {
        case PropertyKind::entropy: return PropertySpec::entropy();
        case PropertyKind::support_size:
            if (k == 0)
                throw UsageError("support_size needs --k");
            return PropertySpec::support_size(k);
        case PropertyKind::support_coverage: return PropertySpec::support_coverage(m);
        case PropertyKind::power_sum: return PropertySpec::power_sum(a);
        case PropertyKind::dist_to_uniform:
            if (k == 0)
                throw UsageError("dist_to_uniform needs --k");
            return PropertySpec::dist_to_uniform(k);
        case PropertyKind::l1_distance: return PropertySpec::l1_distance(reference());
        case PropertyKind::kl_divergence: return PropertySpec::kl_divergence(reference());
        }
        throw UsageError("unknown property");
    }
};

//! How t and s0 are chosen: preset row, manual (alpha, s0 multiplier),
//! or explicit values.
struct ParamFlags
{
    bool preset = false;
    std::optional<double> alpha;
    std::optional<double> s0_mult;
    std::optional<double> t;
    std::optional<std::int64_t> s0;
    bool t_decay = true;
    std::int64_t v_max = 0;

    void add_to(CLI::App& app, bool explicit_values)
    {
        auto* p = app.add_flag("--preset", preset, "Use the tuned per-property t and s0 (default)");
        auto* a = app.add_option("--alpha", alpha, "Manual mode: t = log^{1-alpha}(n) + 1");
        auto* m = app.add_option("--s0-mult", s0_mult, "Manual mode: s0 = round(mult * log^{0.2}(n))");
        p->excludes(a)->excludes(m);
        if (explicit_values) {
            auto* t_opt = app.add_option("--t", t, "Explicit amplification t (> 2.5)");
            auto* s_opt = app.add_option("--s0", s0, "Explicit threshold s0");
            t_opt->needs(s_opt);
            s_opt->needs(t_opt);
            p->excludes(t_opt);
            a->excludes(t_opt);
            m->excludes(t_opt);
        }
        app.add_option("--t-decay", t_decay, "Replace t by max(t/1.5^{v-1}, 1.5) per coefficient")
            ->capture_default_str();
        app.add_option("--v-max", v_max, "Largest count with a coefficient (default max(4r, 200))");
    }

    ParamChoice choice() const
    {
        ParamChoice c;
        c.preset = !(alpha || s0_mult);
        if (alpha)
            c.alpha = *alpha;
        if (s0_mult)
            c.s0_mult = *s0_mult;
        return c;
    }

    EstimatorParams build(double rate, const PropertySpec& spec) const
    {
        if (t)
            return EstimatorParams::make(rate, *t, *s0, t_decay, v_max);
        return derive_params(rate, spec, choice(), SplitMode::two_stream, t_decay, v_max);
    }
};

inline void write_double(std::ostream& os, const char* key, double value)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    os << key << '=' << buf << '\n';
}

//! Open --out (or use `fallback` for "-").
class OutputSink
{
  public:
    OutputSink(const std::string& path, std::ostream& fallback) : stream_(&fallback)
    {
        if (!path.empty() && path != "-") {
            file_.open(path, std::ios::binary);
            if (!file_)
                throw std::runtime_error("cannot write output file '" + path + "'");
            stream_ = &file_;
        }
    }

    std::ostream& stream() { return *stream_; }

  private:
    std::ofstream file_;
    std::ostream* stream_;
};

//---------------------------------------------------------------------------//
// simulate
//---------------------------------------------------------------------------//

struct SimulateFlags
{
    PropertyFlags property;
    ParamFlags params;
    std::string dist = "uniform";
    double dist_param = std::numeric_limits<double>::quiet_NaN();
    std::string n_grid;
    int trials = 100;
    std::uint64_t seed = kDefaultSeed;
    std::vector<std::string> estimators = {"amplified", "empirical", "empirical_plus", "empirical_plusplus"};
    std::string split_mode = "two_stream";
    std::string out = "-";
    std::string dist_out;
    bool strict = false;
    bool fixed_n = false;
    unsigned threads = 1;
};

inline void add_simulate(CLI::App& app, SimulateFlags& f)
{
    f.property.add_to(app, false);
    f.params.add_to(app, false);
    app.add_option("--dist", f.dist, "uniform|dirichlet|zipf|binomial|poisson|geometric")->capture_default_str();
    app.add_option("--dist-param", f.dist_param,
                   "Family parameter (defaults: dirichlet 2, zipf 1.5, binomial 0.3, poisson 3000, geometric 0.99)");
    app.add_option("--n-grid", f.n_grid, "Comma list or lo:hi:points (default 1000:100000:10)");
    app.add_option("--trials", f.trials, "Trials per cell")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--seed", f.seed, "Master seed")->capture_default_str();
    app.add_option("--estimators", f.estimators,
                   "amplified,empirical,empirical_plus,empirical_plusplus,modified_empirical")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--split-mode", f.split_mode, "two_stream|thinned|shared")
        ->check(CLI::IsMember({"two_stream", "thinned", "shared"}))
        ->capture_default_str();
    app.add_option("--out", f.out, "Results CSV path ('-' for stdout)")->capture_default_str();
    app.add_option("--dist-out", f.dist_out, "Also write the probability vector, one per line");
    app.add_flag("--strict", f.strict, "Exit 2 if any cell fails");
    app.add_flag("--fixed-n", f.fixed_n, "Draw exactly n samples instead of Poi(n)");
    app.add_option("--threads", f.threads, "Worker threads (results do not depend on it)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
}

inline int run_simulate(SimulateFlags& f, std::ostream& out, std::ostream& err)
{
    ExperimentConfig cfg;
    const bool coverage = f.property.name == "coverage" || f.property.name == "support_coverage";
    cfg.k = f.property.k ? f.property.k : (coverage ? 1000 : 10000);
    f.property.k = cfg.k;
    cfg.property = f.property.build();
    try {
        cfg.family = parse_family(f.dist);
        cfg.estimators.clear();
        for (const auto& e : f.estimators)
            cfg.estimators.push_back(parse_estimator(e));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    cfg.family_param = f.dist_param;
    cfg.n_grid = f.n_grid.empty() ? (coverage ? coverage_n_grid() : default_n_grid()) : parse_n_grid(f.n_grid);
    cfg.trials = f.trials;
    cfg.seed = f.seed;
    cfg.split_mode = parse_split_mode(f.split_mode);
    cfg.sampling = f.fixed_n ? SamplingMode::fixed : SamplingMode::poissonized;
    cfg.param_choice = f.params.choice();
    cfg.t_decay = f.params.t_decay;
    cfg.threads = f.threads;

    if (!f.dist_out.empty()) {
        const Distribution dist = experiment_distribution(cfg);
        OutputSink sink(f.dist_out, out);
        write_probabilities_csv(sink.stream(), dist);
    }

    OutputSink sink(f.out, out);
    const auto rows = run_experiment(cfg);
    write_results_csv(sink.stream(), rows);

    int failed = 0;
    for (const auto& row : rows) {
        if (row.error) {
            ++failed;
            err << "cell n=" << row.n << " estimator=" << row.estimator << " failed: " << *row.error << '\n';
        }
    }
    return (failed && f.strict) ? kExitRuntime : kExitOk;
}

//---------------------------------------------------------------------------//
// estimate
//---------------------------------------------------------------------------//

struct EstimateFlags
{
    PropertyFlags property;
    ParamFlags params;
    std::string counts;
    std::string counts2;
    std::optional<double> rate;
    std::string estimator = "empirical";
};

inline void add_estimate(CLI::App& app, EstimateFlags& f)
{
    f.property.add_to(app, true);
    f.params.add_to(app, true);
    app.add_option("--counts", f.counts, "First-stream counts file (symbol_id,count)")->required();
    app.add_option("--counts2", f.counts2, "Second-stream counts file; omitted means shared mode");
    app.add_option("--rate", f.rate, "Poisson rate n (required for amplified/modified_empirical)");
    app.add_option("--estimator", f.estimator, "empirical|modified_empirical|amplified")
        ->check(CLI::IsMember({"empirical", "modified_empirical", "amplified"}))
        ->capture_default_str();
}

inline int run_estimate(const EstimateFlags& f, std::ostream& out, std::ostream& err)
{
    const PropertySpec spec = f.property.build();
    SymbolIndex index(!spec.symmetric());
    const Histogram first = to_histogram(read_counts_file(f.counts), index);

    out << "property=" << to_string(spec.kind()) << '\n';
    out << "estimator=" << f.estimator << '\n';
    if (f.estimator == "empirical") {
        write_double(out, "estimate", empirical(first, spec));
        return kExitOk;
    }
    if (!f.rate)
        throw UsageError("--rate is required for estimator " + f.estimator);
    if (!(*f.rate > 0))
        throw UsageError("--rate must be positive");
    if (f.estimator == "modified_empirical") {
        write_double(out, "estimate", modified_empirical(first, *f.rate, spec));
        return kExitOk;
    }

    SplitSample sample;
    sample.first = first;
    sample.rate = *f.rate;
    if (f.counts2.empty()) {
        err << "warning: --counts2 not given; using the first stream for both roles (shared mode)\n";
        sample.second = first;
    } else {
        sample.second = to_histogram(read_counts_file(f.counts2), index);
    }
    const EstimatorParams params = f.params.build(*f.rate, spec);
    const auto est = amplified_estimate(sample, spec, params);
    write_double(out, "estimate", est.value);
    out << "mode=" << (f.counts2.empty() ? "shared" : "two_stream") << '\n';
    write_double(out, "small_part", est.small_part);
    write_double(out, "large_part", est.large_part);
    out << "small_symbols=" << est.small_symbols << '\n';
    out << "large_symbols=" << est.large_symbols << '\n';
    write_double(out, "rate", params.rate);
    write_double(out, "t", params.t);
    out << "s0=" << params.s0 << '\n';
    out << "u_max=" << params.u_max << '\n';
    out << "r=" << params.r << '\n';
    out << "v_max=" << params.v_max << '\n';
    out << "t_decay=" << (params.t_decay ? "true" : "false") << '\n';
    out << "overflow_count=" << est.overflow_count << '\n';
    out << "clamped_hits=" << est.clamped_hits << '\n';
    return kExitOk;
}

//---------------------------------------------------------------------------//
// coeffs
//---------------------------------------------------------------------------//

struct CoeffsFlags
{
    PropertyFlags property;
    ParamFlags params;
    double rate = 0.0;
    std::optional<double> q_mass;
    std::string out = "-";
};

inline void add_coeffs(CLI::App& app, CoeffsFlags& f)
{
    f.property.add_to(app, true);
    f.params.add_to(app, true);
    app.add_option("--rate", f.rate, "Poisson rate n")->required();
    app.add_option("--q-mass", f.q_mass, "Reference mass q_x of the table (l1/kl)");
    app.add_option("--out", f.out, "Coefficient CSV path ('-' for stdout)")->capture_default_str();
}

inline int run_coeffs(const CoeffsFlags& f, std::ostream& out)
{
    const PropertySpec spec = f.property.build();
    if (!(f.rate > 0))
        throw UsageError("--rate must be positive");
    double mass = 0.0;
    if (!spec.symmetric()) {
        if (f.q_mass)
            mass = *f.q_mass;
        else if (!spec.q().empty())
            mass = spec.q()[0];
    }
    const EstimatorParams params = f.params.build(f.rate, spec);
    const CoefficientTable table = build_coefficient_table(spec, params, mass);
    OutputSink sink(f.out, out);
    write_coefficient_csv(sink.stream(), table);
    return kExitOk;
}

//---------------------------------------------------------------------------//
// selfcheck
//---------------------------------------------------------------------------//

struct SelfcheckFlags
{
    bool deep = false;
    std::string fault = "none";
};

inline void add_selfcheck(CLI::App& app, SelfcheckFlags& f)
{
    app.add_flag("--deep", f.deep, "Extended u, y, lambda and property grids");
    app.add_option("--inject-fault", f.fault, "Negative control: 'flip_sign' corrupts the coefficients")
        ->check(CLI::IsMember({"none", "flip_sign"}))
        ->capture_default_str();
}

inline int run_selfcheck_cmd(const SelfcheckFlags& f, std::ostream& out)
{
    SelfcheckOptions opts;
    opts.deep = f.deep;
    opts.fault = f.fault == "flip_sign" ? InjectedFault::flip_coefficient_sign : InjectedFault::none;
    bool all = true;
    for (const auto& check : run_selfcheck(opts)) {
        out << (check.passed ? "PASS " : "FAIL ") << check.name << ": " << check.detail << '\n';
        all = all && check.passed;
    }
    return all ? kExitOk : kExitRuntime;
}

//---------------------------------------------------------------------------//
// entry point
//---------------------------------------------------------------------------//

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Amplified estimation of additive distribution properties", "ampest"};
    app.require_subcommand(1);

    SimulateFlags simulate;
    EstimateFlags estimate;
    CoeffsFlags coeffs;
    SelfcheckFlags selfcheck;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo MSE sweep, results as CSV");
    auto* est_cmd = app.add_subcommand("estimate", "Estimate a property from count files");
    auto* coef_cmd = app.add_subcommand("coeffs", "Dump the coefficient table h_v v!");
    auto* check_cmd = app.add_subcommand("selfcheck", "Run the numerical identity checks");
    add_simulate(*sim_cmd, simulate);
    add_estimate(*est_cmd, estimate);
    add_coeffs(*coef_cmd, coeffs);
    add_selfcheck(*check_cmd, selfcheck);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Prints help (exit code 0) or the parse error for the right subcommand.
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*sim_cmd)
            return run_simulate(simulate, out, err);
        if (*est_cmd)
            return run_estimate(estimate, out, err);
        if (*coef_cmd)
            return run_coeffs(coeffs, out);
        return run_selfcheck_cmd(selfcheck, out);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace ampest::cli
