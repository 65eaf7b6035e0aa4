#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spdecouple/config.hpp"
#include "spdecouple/errors.hpp"
#include "spdecouple/estimators.hpp"
#include "spdecouple/experiments.hpp"
#include "spdecouple/parallel.hpp"

using namespace spdecouple;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("spdecouple_test_" + name);
    fs::remove_all(p);
    return p;
}

ExperimentConfig small_rd(std::size_t M, double t_max) {
    ExperimentConfig c = default_config(ExperimentKind::RdCouple);
    c.n = 16;
    c.dt = 1e-3;
    c.M = M;
    c.t_max = t_max;
    c.threads = 1;
    c.grid_points = 20;
    return c;
}

CouplingOutcome met(std::size_t id, double tau) { return {id, tau, false, false}; }

class ThreadsEnv : public ::testing::Test {
protected:
    void SetUp() override { unsetenv("HARNESS_THREADS"); }
    void TearDown() override { unsetenv("HARNESS_THREADS"); }
};

} // namespace

TEST(Harness, SmokeSingleStep) {
    unsetenv("HARNESS_THREADS");
    const ExperimentConfig c = small_rd(1, 1e-3);
    const fs::path dir = scratch("smoke");
    const ReportBundle b = run_experiment(c, dir.string());
    EXPECT_FALSE(b.artifacts.empty());
    const auto rows = lines(dir / "tau_samples.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], "traj_id,tau,censored,blowup");
    EXPECT_TRUE(fs::exists(dir / "summary.json"));
    EXPECT_TRUE(fs::exists(dir / "config.cfg"));
    EXPECT_EQ(load_config((dir / "config.cfg").string()), c);
    fs::remove_all(dir);
}

TEST(Harness, RowCountAndHeaders) {
    unsetenv("HARNESS_THREADS");
    const ExperimentConfig c = small_rd(500, 0.5);
    const fs::path dir = scratch("rows");
    run_experiment(c, dir.string());
    const auto tau = lines(dir / "tau_samples.csv");
    EXPECT_EQ(tau.size(), 501u);
    EXPECT_EQ(lines(dir / "survival.csv").at(0), "t,p_hat,ci_lo,ci_hi");
    EXPECT_EQ(lines(dir / "tv_check.csv").at(0), "function,t,mean_diff,diff_se,bound,bound_hi,violation");
    const std::string raw = slurp(dir / "tau_samples.csv");
    EXPECT_EQ(raw.find('\r'), std::string::npos);
    for (std::size_t i = 1; i < tau.size(); ++i) {
        ASSERT_EQ(tau[i].rfind(std::to_string(i - 1) + ",", 0), 0u) << tau[i];
    }
    fs::remove_all(dir);
}

TEST(Harness, RepeatRunsAreByteIdentical) {
    unsetenv("HARNESS_THREADS");
    ExperimentConfig c = small_rd(60, 0.3);
    const fs::path a = scratch("rep_a"), b = scratch("rep_b");
    run_experiment(c, a.string());
    c.threads = 3;
    run_experiment(c, b.string());
    for (const char* f : {"tau_samples.csv", "survival.csv", "tv_check.csv"}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Harness, OtherKindsWriteTheirTables) {
    unsetenv("HARNESS_THREADS");
    ExperimentConfig ou = default_config(ExperimentKind::OuValidate);
    ou.M = 200;
    ou.threads = 1;
    const fs::path d1 = scratch("ou");
    run_experiment(ou, d1.string());
    EXPECT_EQ(lines(d1 / "ou_validate.csv").at(0), "statistic,stepper_mean,stepper_se,oracle_mean,oracle_se,z");

    ExperimentConfig gen = default_config(ExperimentKind::GeneratorCheck);
    gen.M = 200;
    gen.threads = 1;
    const fs::path d2 = scratch("gen");
    run_experiment(gen, d2.string());
    EXPECT_EQ(lines(d2 / "generator.csv").at(0), "case,estimate,std_error,prediction,residual,z");

    const fs::path d3 = scratch("lyap");
    ExperimentConfig ly = default_config(ExperimentKind::LyapunovBuild);
    run_experiment(ly, d3.string());
    EXPECT_EQ(lines(d3 / "lyapunov.csv").at(0), "r,f,fprime");
    for (const auto& d : {d1, d2, d3}) fs::remove_all(d);
}

TEST(Harness, DerivedSeedsDiffer) {
    EXPECT_NE(derived_seed(1, 8), derived_seed(1, 9));
    EXPECT_NE(derived_seed(1, 8), derived_seed(2, 8));
    EXPECT_EQ(derived_seed(5, 8), derived_seed(5, 8));
}

TEST(Harness, NumberFormatRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) {
        EXPECT_EQ(std::stod(format_number(v)), v);
    }
    EXPECT_EQ(format_number(0.5), "0.5");
}

TEST(TauStats, AllEqualTimes) {
    const LyapunovTable t = build_f(RDConstants{0.0, 1.0 / 6.0}, 12.0);
    std::vector<CouplingOutcome> o;
    for (std::size_t i = 0; i < 50; ++i) o.push_back(met(i, 1.0));
    const std::vector<double> times = uniform_times(2.0, 4);
    const TauStats s = estimate_tau_stats(o, t, 1.0, times);
    EXPECT_DOUBLE_EQ(s.mean.mean, 1.0);
    EXPECT_DOUBLE_EQ(s.mean.hi - s.mean.lo, 0.0);
    EXPECT_EQ(s.censored, 0u);
    EXPECT_NEAR(s.f_bound, t.eval(1.0, Which::f), 1e-15);
    EXPECT_NEAR(s.exp_bound_display, std::exp(1.0 / t.Lambda()), 1e-12);
}

TEST(TauStats, ExponentialMean) {
    const LyapunovTable t = build_f(RDConstants{0.0, 1.0 / 6.0}, 12.0);
    std::mt19937_64 rng(1);
    std::exponential_distribution<double> ex(2.0);
    std::vector<CouplingOutcome> o;
    for (std::size_t i = 0; i < 4000; ++i) o.push_back(met(i, ex(rng)));
    const TauStats s = estimate_tau_stats(o, t, 1.0, uniform_times(3.0, 30));
    EXPECT_NEAR(s.mean.mean, 0.5, 0.03);
    EXPECT_LE(s.mean.lo, 0.5);
    EXPECT_GE(s.mean.hi, 0.5);
    EXPECT_NEAR(s.tail_rate, 2.0, 0.3);
}

TEST(TauStats, AllCensoredThrows) {
    const LyapunovTable t = build_f(RDConstants{0.0, 1.0 / 6.0}, 12.0);
    std::vector<CouplingOutcome> o;
    for (std::size_t i = 0; i < 50; ++i) o.push_back({i, 5.0, true, false});
    EXPECT_THROW(estimate_tau_stats(o, t, 1.0, uniform_times(5.0, 10)), InsufficientData);
}

TEST(Survival, NonIncreasingAndStopsAtCensoring) {
    std::mt19937_64 rng(2);
    std::exponential_distribution<double> ex(1.0);
    std::vector<CouplingOutcome> o;
    for (std::size_t i = 0; i < 300; ++i) o.push_back(met(i, ex(rng)));
    o.push_back({300, 2.0, true, false});
    const auto times = uniform_times(4.0, 40);
    ASSERT_EQ(times.size(), 41u);
    const auto curve = survival_curve(o, times);
    ASSERT_EQ(curve.size(), 21u);
    EXPECT_EQ(curve.front().p.p_hat, 1.0);
    for (std::size_t j = 1; j < curve.size(); ++j) EXPECT_LE(curve[j].p.p_hat, curve[j - 1].p.p_hat);
}

TEST(TvCheck, ConstantFunctionGivesZero) {
    const Grid g = make_grid(8);
    std::vector<CouplingOutcome> o;
    TvObservations obs;
    obs.times = {0.0, 0.5, 1.0};
    obs.diff.assign(3, std::vector<double>(100, 0.0));
    for (std::size_t i = 0; i < 100; ++i) o.push_back(met(i, 0.01 * static_cast<double>(i)));
    const std::vector<TestFunction> fns{{"one", [](const Field&) { return 1.0; }, 1.0}};
    const auto rows = tv_check({obs}, fns, o);
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.mean_diff, 0.0);
        EXPECT_FALSE(r.violation);
        EXPECT_LE(r.bound, r.bound_hi);
    }
    EXPECT_NEAR(rows[1].bound, 0.5, 1e-12);
    const auto builtin = builtin_test_functions(g);
    ASSERT_EQ(builtin.size(), 2u);
    EXPECT_NEAR(builtin[1].phi(Field(g)), 1.0, 1e-15);
}

TEST(Generator, MergedPairIsZero) {
    const Grid g = make_grid(4);
    const Field x = make_profile(g, Profile{Profile::Kind::Sine, 1, 0.3});
    const SolverConfig cfg{1e-5, 1e3, Scheme::SemiImplicitEuler};
    const GeneratorResult r = generator_check("merged", x, x, ReactionDiffusion{}, cfg, square_function(), 100, 1, 1);
    EXPECT_EQ(r.estimate, 0.0);
    EXPECT_EQ(r.prediction, 0.0);
}

TEST(Generator, SquareFunctionWithoutDrift) {
    // d|D|^2 = 2 <A D, D> dt + 4 dt under reflection, so L f = 4 - 2 |d|_{H10}^2.
    const Grid g = make_grid(4);
    const Field x1 = make_profile(g, Profile{Profile::Kind::Sine, 1, 0.5});
    const Field x2 = make_profile(g, Profile{Profile::Kind::Sine, 1, -0.5});
    const SolverConfig cfg{1e-5, 1e3, Scheme::SemiImplicitEuler};
    const GeneratorResult r = generator_check("sq", x1, x2, ZeroDrift{}, cfg, square_function(), 20000, 3, 1);
    const double h1 = norm(x1 - x2, NormKind::H10);
    EXPECT_NEAR(r.prediction, 4.0 - 2.0 * h1 * h1, 1e-10);
    EXPECT_LE(std::abs(r.estimate - r.prediction), 4.0 * r.std_error + 0.01 * std::abs(r.prediction));
}

TEST_F(ThreadsEnv, ResolveThreads) {
    EXPECT_EQ(resolve_threads(3), 3u);
    EXPECT_GE(resolve_threads(0), 1u);
    setenv("HARNESS_THREADS", "5", 1);
    EXPECT_EQ(resolve_threads(3), 5u);
    setenv("HARNESS_THREADS", "five", 1);
    EXPECT_THROW(resolve_threads(1), ConfigError);
    setenv("HARNESS_THREADS", "0", 1);
    EXPECT_THROW(resolve_threads(1), ConfigError);
}

TEST(ParallelMap, OrderAndExceptions) {
    const auto v = parallel_map(1000, 4, [](std::size_t i) { return i * i; });
    for (std::size_t i = 0; i < v.size(); ++i) ASSERT_EQ(v[i], i * i);
    EXPECT_TRUE(parallel_map(0, 4, [](std::size_t i) { return i; }).empty());
    EXPECT_THROW(parallel_map(100, 3,
                              [](std::size_t i) {
                                  if (i == 37) throw std::runtime_error("x");
                                  return i;
                              }),
                 std::runtime_error);
}
