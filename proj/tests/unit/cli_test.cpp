#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ampest/counts_file.hpp"

namespace ampest::cli {
namespace {

namespace fs = std::filesystem;

struct Result
{
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "ampest");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test
{
  protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path()
               / ("ampest_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write(const std::string& name, const std::string& text) const
    {
        std::ofstream(path(name)) << text;
        return path(name);
    }

    static std::string slurp(const std::string& p)
    {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), {}};
    }

    static std::vector<std::string> lines(const std::string& text)
    {
        std::vector<std::string> out;
        std::stringstream ss(text);
        for (std::string l; std::getline(ss, l);)
            out.push_back(l);
        return out;
    }

    static std::string value(const std::string& block, const std::string& key)
    {
        for (const auto& l : lines(block)) {
            if (l.rfind(key + "=", 0) == 0)
                return l.substr(key.size() + 1);
        }
        return {};
    }

    fs::path dir_;
};

TEST_F(CliTest, simulate_single_row)
{
    const auto out = path("r.csv");
    const std::vector<std::string> args = {"simulate", "--property", "entropy", "--dist",      "uniform",
                                           "--k",      "100",        "--n-grid", "1000",      "--trials",
                                           "2",        "--seed",     "7",        "--estimators", "empirical",
                                           "--out",    out};
    const auto r = invoke(args);
    ASSERT_EQ(0, r.code) << r.err;
    const auto rows = lines(slurp(out));
    ASSERT_EQ(2u, rows.size());
    EXPECT_EQ(std::string(kResultsHeader), rows[0]);
    EXPECT_EQ(0u, rows[1].find("entropy,uniform,100,1000,empirical,2,"));

    const std::string first = slurp(out);
    ASSERT_EQ(0, invoke(args).code);
    EXPECT_EQ(first, slurp(out));
}

TEST_F(CliTest, simulate_threads_do_not_change_output)
{
    std::vector<std::string> args = {"simulate", "--dist", "zipf", "--k", "300", "--n-grid", "400,800",
                                     "--trials", "5", "--estimators", "amplified,empirical_plus"};
    const auto one = invoke(args);
    ASSERT_EQ(0, one.code) << one.err;
    args.insert(args.end(), {"--threads", "4"});
    EXPECT_EQ(one.out, invoke(args).out);
}

TEST_F(CliTest, simulate_coverage_preset_grid)
{
    const auto r = invoke({"simulate", "--property", "coverage", "--m", "5000", "--k", "1000", "--trials", "2",
                           "--estimators", "empirical"});
    ASSERT_EQ(0, r.code) << r.err;
    const auto rows = lines(r.out);
    ASSERT_EQ(6u, rows.size());
    EXPECT_EQ(0u, rows[1].find("coverage,uniform,1000,1000,"));
    EXPECT_EQ(0u, rows[5].find("coverage,uniform,1000,3000,"));
}

TEST_F(CliTest, simulate_dist_out)
{
    const auto probs = path("p.csv");
    const auto r = invoke({"simulate", "--dist", "uniform", "--k", "4", "--n-grid", "200", "--trials", "1",
                           "--estimators", "empirical", "--dist-out", probs});
    ASSERT_EQ(0, r.code) << r.err;
    EXPECT_EQ("0.25\n0.25\n0.25\n0.25\n", slurp(probs));
}

TEST_F(CliTest, simulate_errors)
{
    EXPECT_EQ(kExitUsage, invoke({"simulate", "--bogus"}).code);
    EXPECT_EQ(kExitUsage, invoke({"simulate", "--property", "renyi"}).code);
    EXPECT_EQ(kExitUsage, invoke({"simulate", "--dist", "cauchy"}).code);
    EXPECT_EQ(kExitUsage, invoke({"simulate", "--n-grid", "100,50"}).code);
    EXPECT_EQ(kExitUsage, invoke({"simulate", "--n-grid", "1e3:abc:4"}).code);
    EXPECT_EQ(kExitUsage, invoke({"simulate", "--preset", "--alpha", "0.3"}).code);
    EXPECT_EQ(kExitUsage, invoke({"simulate", "--split-mode", "halves"}).code);
    EXPECT_EQ(kExitRuntime, invoke({"simulate", "--n-grid", "1000", "--out", "/nonexistent/dir/r.csv"}).code);
    EXPECT_EQ(kExitUsage, invoke({}).code);
}

TEST_F(CliTest, simulate_strict_failed_cell)
{
    const std::vector<std::string> args = {"simulate", "--k", "10", "--n-grid", "100", "--trials", "1",
                                           "--estimators", "amplified"};
    const auto lax = invoke(args);
    EXPECT_EQ(0, lax.code);
    EXPECT_NE(std::string::npos, lax.err.find("failed"));
    auto strict = args;
    strict.push_back("--strict");
    EXPECT_EQ(kExitRuntime, invoke(strict).code);
}

TEST_F(CliTest, help_lists_flags)
{
    const auto r = invoke({"simulate", "--help"});
    EXPECT_EQ(0, r.code);
    for (const char* flag : {"--property", "--dist", "--k", "--n-grid", "--trials", "--seed", "--estimators",
                             "--split-mode", "--out", "--m", "--a", "--q-file", "--alpha", "--s0-mult",
                             "--t-decay", "--preset", "--threads", "--strict"}) {
        EXPECT_NE(std::string::npos, r.out.find(flag)) << flag;
    }
}

TEST_F(CliTest, estimate_empirical)
{
    const auto counts = write("c.csv", "symbol,count\na,3\nb,1\n");
    const auto r = invoke({"estimate", "--property", "entropy", "--counts", counts});
    ASSERT_EQ(0, r.code) << r.err;
    EXPECT_NEAR(0.5623351, std::stod(value(r.out, "estimate")), 1e-7);

    const auto empty = write("e.csv", "");
    const auto z = invoke({"estimate", "--property", "entropy", "--counts", empty});
    ASSERT_EQ(0, z.code) << z.err;
    EXPECT_EQ(0.0, std::stod(value(z.out, "estimate")));
}

TEST_F(CliTest, estimate_amplified_shared_warning)
{
    const auto counts = write("c.csv", "a,3\nb,1\nc,1\n");
    const auto r = invoke({"estimate", "--property", "entropy", "--counts", counts, "--estimator", "amplified",
                           "--rate", "1000"});
    ASSERT_EQ(0, r.code) << r.err;
    EXPECT_NE(std::string::npos, r.err.find("shared"));
    EXPECT_EQ("shared", value(r.out, "mode"));
    EXPECT_EQ("3", value(r.out, "small_symbols"));
    const double total = std::stod(value(r.out, "estimate"));
    EXPECT_NEAR(total, std::stod(value(r.out, "small_part")) + std::stod(value(r.out, "large_part")), 1e-15);
}

TEST_F(CliTest, estimate_amplified_two_stream_matches_library)
{
    const auto c1 = write("c1.csv", "0,2\n1,1\n5,40\n");
    const auto c2 = write("c2.csv", "0,1\n5,38\n7,1\n");
    const auto r = invoke({"estimate", "--property", "entropy", "--counts", c1, "--counts2", c2, "--estimator",
                           "amplified", "--rate", "500", "--t", "3", "--s0", "2", "--t-decay", "false"});
    ASSERT_EQ(0, r.code) << r.err;
    EXPECT_TRUE(r.err.empty());

    const auto params = EstimatorParams::make(500, 3, 2, false);
    SymbolIndex index(false);
    SplitSample s;
    s.first = to_histogram(read_counts_file(c1), index);
    s.second = to_histogram(read_counts_file(c2), index);
    s.rate = 500;
    const auto e = amplified_estimate(s, PropertySpec::entropy(), params);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", e.value);
    EXPECT_EQ(buf, value(r.out, "estimate"));
    EXPECT_EQ("1", value(r.out, "large_symbols"));
}

TEST_F(CliTest, estimate_l1_uses_numeric_symbols)
{
    const auto q = write("q.csv", "0.5\n0.25\n0.25\n");
    const auto counts = write("c.csv", "0,2\n2,2\n");
    const auto r = invoke({"estimate", "--property", "l1", "--q-file", q, "--counts", counts});
    ASSERT_EQ(0, r.code) << r.err;
    EXPECT_NEAR(0.5, std::stod(value(r.out, "estimate")), 1e-15);
}

TEST_F(CliTest, estimate_errors)
{
    const auto counts = write("c.csv", "a,3\n");
    EXPECT_EQ(kExitUsage,
              invoke({"estimate", "--property", "entropy", "--counts", counts, "--estimator", "amplified"}).code);
    EXPECT_EQ(kExitUsage, invoke({"estimate", "--counts", counts}).code);
    const auto bad = write("bad.csv", "a,0\n");
    EXPECT_EQ(kExitRuntime, invoke({"estimate", "--property", "entropy", "--counts", bad}).code);
    const auto dup = write("dup.csv", "a,1\na,2\n");
    EXPECT_EQ(kExitRuntime, invoke({"estimate", "--property", "entropy", "--counts", dup}).code);
    EXPECT_EQ(kExitRuntime, invoke({"estimate", "--property", "entropy", "--counts", path("missing.csv")}).code);
}

TEST_F(CliTest, coeffs_dump)
{
    const std::vector<std::string> args = {"coeffs", "--property", "entropy", "--rate", "150", "--t", "3",
                                           "--s0", "1", "--t-decay", "false", "--v-max", "50"};
    const auto r = invoke(args);
    ASSERT_EQ(0, r.code) << r.err;
    const auto rows = lines(r.out);
    ASSERT_EQ(51u, rows.size());
    EXPECT_EQ("v,h_v_times_vfact,clamped", rows[0]);
    const double x = 1.0 / 450;
    const double v1 = 3 * (-x * std::log(x)) * poisson_tail(40, 2);
    EXPECT_EQ(0u, rows[1].find("1,"));
    EXPECT_NEAR(v1, std::stod(rows[1].substr(2)), 1e-15 * v1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto first = rows[i].find(',');
        const auto second = rows[i].rfind(',');
        EXPECT_TRUE(std::isfinite(std::stod(rows[i].substr(first + 1, second - first - 1)))) << rows[i];
    }
    EXPECT_EQ(r.out, invoke(args).out);
}

TEST_F(CliTest, coeffs_preset_finite)
{
    const auto out = path("c.csv");
    const auto r = invoke({"coeffs", "--property", "support_size", "--k", "1000", "--rate", "1000", "--preset",
                           "--out", out});
    ASSERT_EQ(0, r.code) << r.err;
    const auto rows = lines(slurp(out));
    ASSERT_GT(rows.size(), 200u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(std::string::npos, rows[i].find("nan"));
        EXPECT_EQ(std::string::npos, rows[i].find("inf"));
    }
}

TEST_F(CliTest, coeffs_errors)
{
    EXPECT_EQ(kExitUsage, invoke({"coeffs", "--property", "entropy"}).code);
    EXPECT_EQ(kExitUsage, invoke({"coeffs", "--property", "entropy", "--rate", "100"}).code);
    EXPECT_EQ(kExitUsage, invoke({"coeffs", "--property", "entropy", "--rate", "150", "--t", "2", "--s0", "1"}).code);
    EXPECT_EQ(kExitUsage, invoke({"coeffs", "--property", "entropy", "--rate", "150", "--t", "3"}).code);
}

TEST_F(CliTest, selfcheck)
{
    const auto ok = invoke({"selfcheck"});
    EXPECT_EQ(0, ok.code) << ok.out;
    EXPECT_EQ(4u, lines(ok.out).size());
    for (const auto& l : lines(ok.out))
        EXPECT_EQ(0u, l.find("PASS ")) << l;

    const auto bad = invoke({"selfcheck", "--inject-fault", "flip_sign"});
    EXPECT_EQ(kExitRuntime, bad.code);
    EXPECT_NE(std::string::npos, bad.out.find("FAIL "));
}

TEST_F(CliTest, selfcheck_deep)
{
    const auto r = invoke({"selfcheck", "--deep"});
    EXPECT_EQ(0, r.code) << r.out;
}

TEST(NGridTest, parsing)
{
    EXPECT_EQ((std::vector<std::uint64_t>{1000, 3162, 10000}), parse_n_grid("1000,3162,10000"));
    EXPECT_EQ((std::vector<std::uint64_t>{1000, 10000, 100000}), parse_n_grid("1000:100000:3"));
    EXPECT_EQ(default_n_grid(), parse_n_grid("1000:100000:10"));
    EXPECT_THROW(parse_n_grid(""), UsageError);
    EXPECT_THROW(parse_n_grid("10,x"), UsageError);
    EXPECT_THROW(parse_n_grid("10.5"), UsageError);
    EXPECT_THROW(parse_n_grid("100:10:3"), UsageError);
    EXPECT_THROW(parse_n_grid("10:100"), UsageError);
    EXPECT_THROW(parse_n_grid("5,5"), UsageError);
}

TEST(CountsFileTest, parsing)
{
    std::istringstream in("symbol,count\n\n a , 3\nb,1\n");
    const auto counts = read_counts(in);
    ASSERT_EQ(2u, counts.size());
    EXPECT_EQ("a", counts[0].symbol);
    EXPECT_EQ(3u, counts[0].count);

    for (const char* bad : {"a\n", "a,1,2\n", ",3\n", "a,-1\n", "a,1.5\n", "a,0\n", "a,1\na,1\n",
                            "a,1\nsymbol,count\n"}) {
        std::istringstream s(bad);
        EXPECT_THROW(read_counts(s), FormatError) << bad;
    }
}

TEST(CountsFileTest, symbol_index)
{
    std::istringstream in("zeta,2\nalpha,5\n");
    SymbolIndex index(false);
    const auto h = to_histogram(read_counts(in), index);
    EXPECT_EQ(2u, h.count(0));
    EXPECT_EQ(5u, h.count(1));

    std::istringstream numeric("7,1\n2,4\n");
    SymbolIndex by_value(true);
    const auto n = to_histogram(read_counts(numeric), by_value);
    EXPECT_EQ(4u, n.count(2));
    EXPECT_EQ(1u, n.count(7));

    SymbolIndex strict(true);
    EXPECT_THROW(strict("abc"), FormatError);
}

TEST(CountsFileTest, probabilities)
{
    std::istringstream in("0.5,0.25\n0.25\n");
    EXPECT_EQ((std::vector<double>{0.5, 0.25, 0.25}), read_probabilities(in));
    std::istringstream bad("0.5\nhalf\n");
    EXPECT_THROW(read_probabilities(bad), FormatError);
}

} // namespace
} // namespace ampest::cli
