#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "memvisco/config.hpp"
#include "memvisco/experiment.hpp"

using namespace memvisco;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> violations_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.violations();
    }
    return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
    for (const auto& s : v)
        if (s.find(needle) != std::string::npos) return true;
    return false;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("memvisco_test_" + name);
    fs::remove_all(d);
    return d;
}

const char* kMinimal =
    "mode = single_run\n[kernel]\nfamily = prony\ng_inf = 0.5\nterms = [[1.0, 0.5]]\n[grid]\nn = 49\n[time]\nT = 1.0\n";

}  // namespace

TEST(ParseConfig, MinimalConfigGetsDefaults) {
    const auto c = parse_config(kMinimal);
    EXPECT_EQ(c.mode, Mode::SingleRun);
    EXPECT_EQ(c.dim, 1);
    EXPECT_EQ(c.time.T, 1.0);
    EXPECT_EQ(c.time.cfl, 0.5);
    EXPECT_FALSE(c.time.dt.has_value());
    EXPECT_EQ(c.eps, 0.05);
    EXPECT_EQ(c.formulation, Formulation::IntegroDifferential);
    EXPECT_EQ(c.output.snapshot_stride, 10u);
    EXPECT_EQ(c.tolerances.cauchy, 5e-2);
    EXPECT_EQ(c.solver.memory_window, 0u);
    EXPECT_DOUBLE_EQ(c.kernel.value(0.0), 1.5);
}

TEST(ParseConfig, PowerLawAlphaOutOfRange) {
    const auto v = violations_of("mode = single_run\n[kernel]\nfamily = powerlaw\nc = 1\nalpha = 1.5\n");
    EXPECT_TRUE(any_contains(v, "α in (0,1)"));
}

TEST(ParseConfig, MissingEpsBlockIsNamed) {
    const auto v = violations_of("mode = eps_sequence\n[kernel]\nfamily = constant\ng0 = 1\n");
    EXPECT_TRUE(any_contains(v, "[eps_sequence]"));
}

TEST(ParseConfig, UnknownKeyReportsNearest) {
    const std::string text =
        "mode = single_run\n[kernel]\nfamily = constant\ng0 = 1\n[grid]\nn = 9\n[time]\nT = 1\nTT = 2\ncfll = 0.3\n";
    const auto v = violations_of(text);
    EXPECT_TRUE(any_contains(v, "'time.TT'"));
    EXPECT_TRUE(any_contains(v, "'time.cfll'"));
    EXPECT_TRUE(any_contains(v, "nearest valid key: 'time.cfl'"));
}

TEST(ParseConfig, AllViolationsAreReported) {
    const auto v = violations_of(
        "mode = single_run\n[kernel]\nfamily = powerlaw\nc = -1\nalpha = 2\n[grid]\ndim = 4\n[time]\nT = -1\n");
    EXPECT_GE(v.size(), 4u);
}

TEST(ParseConfig, UnknownSectionAndMode) {
    EXPECT_TRUE(any_contains(violations_of(std::string(kMinimal) + "[grdi]\nn = 5\n"), "[grid]"));
    EXPECT_FALSE(violations_of("mode = nope\n[kernel]\nfamily = constant\ng0 = 1\n").empty());
    EXPECT_FALSE(violations_of("[kernel]\nfamily = constant\ng0 = 1\n").empty());
}

TEST(ParseConfig, SumKernelFromParts) {
    const auto c = parse_config(read_file(fs::path(MEMVISCO_CONFIG_DIR) / "admissibility_powerlaw.cfg"));
    EXPECT_EQ(c.mode, Mode::Admissibility);
    const double t = 0.7;
    EXPECT_NEAR(c.kernel.value(t), 0.2 + 0.5 * std::exp(-t / 2.0) + std::pow(t, -0.5), 1e-14);
}

TEST(ParseConfig, AllBundledConfigsParse) {
    std::size_t count = 0;
    for (const auto& e : fs::directory_iterator(MEMVISCO_CONFIG_DIR)) {
        if (e.path().extension() != ".cfg") continue;
        EXPECT_NO_THROW(parse_config(read_file(e.path()))) << e.path();
        ++count;
    }
    EXPECT_GE(count, 8u);
}

TEST(ToleranceOverride, AppliesAndRejects) {
    auto c = parse_config(kMinimal);
    apply_tolerance_override(c, "cauchy=1e-3");
    EXPECT_EQ(c.tolerances.cauchy, 1e-3);
    apply_tolerance_override(c, "tolerances.fixed_point = 1e-10");
    EXPECT_EQ(c.solver.fixed_point_tolerance, 1e-10);
    EXPECT_THROW(apply_tolerance_override(c, "cauchi=1"), ConfigError);
    EXPECT_THROW(apply_tolerance_override(c, "cauchy=abc"), ConfigError);
    EXPECT_THROW(apply_tolerance_override(c, "cauchy=-1"), ConfigError);
    EXPECT_THROW(apply_tolerance_override(c, "cauchy"), ConfigError);
}

TEST(Experiment, ElasticLimitPassesAndWritesArtifacts) {
    const auto c = parse_config(read_file(fs::path(MEMVISCO_CONFIG_DIR) / "elastic_limit.cfg"));
    const auto out = fresh_dir("elastic");
    const auto r = run_experiment(c, out, 1);
    EXPECT_EQ(r.exit_code, 0);
    for (const char* f : {"manifest.json", "energy.csv", "summary.csv", "trajectory.csv", "plot.py"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    const auto manifest = nlohmann::json::parse(read_file(out / "manifest.json"));
    EXPECT_TRUE(manifest["config_resolved"].contains("tolerances"));
    fs::remove_all(out);
}

TEST(Experiment, CflRefusalExitsNonzeroWithDiagnostic) {
    const auto c = parse_config(read_file(fs::path(MEMVISCO_CONFIG_DIR) / "cfl_refusal.cfg"));
    const auto out = fresh_dir("cfl");
    const auto r = run_experiment(c, out, 1);
    EXPECT_EQ(r.exit_code, kExitAbort);
    EXPECT_NE(r.abort_message.find("required dt"), std::string::npos);
    EXPECT_NE(read_file(out / "manifest.json").find("required dt"), std::string::npos);
    fs::remove_all(out);
}

TEST(Experiment, StressConfigPasses) {
    const auto c = parse_config(read_file(fs::path(MEMVISCO_CONFIG_DIR) / "stress_relaxation.cfg"));
    const auto out = fresh_dir("stress");
    EXPECT_EQ(run_experiment(c, out, 1).exit_code, 0);
    fs::remove_all(out);
}

TEST(Experiment, RepeatedRunsAreByteIdentical) {
    const auto c = parse_config(read_file(fs::path(MEMVISCO_CONFIG_DIR) / "manufactured_prony.cfg"));
    const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
    run_experiment(c, a, 1);
    run_experiment(c, b, 2);
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        if (e.path().extension() != ".csv") continue;
        EXPECT_EQ(read_file(e.path()), read_file(b / e.path().filename())) << e.path().filename();
        ++compared;
    }
    EXPECT_GT(compared, 0u);
    fs::remove_all(a);
    fs::remove_all(b);
}
