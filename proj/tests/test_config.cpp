#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>

#include "spdecouple/config.hpp"
#include "spdecouple/errors.hpp"

using namespace spdecouple;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

} // namespace

TEST(Config, RoundTrip) {
    ExperimentConfig c;
    c.experiment = ExperimentKind::BurgersStaged;
    c.dt = 1.0 / 3.0;
    c.M = 123;
    c.x1 = Profile{Profile::Kind::Sine, 2, 0.1 + 0.2};
    c.x2 = Profile{Profile::Kind::Constant, 1, -std::numbers::pi};
    c.meeting_rule = MeetingRule::SnapOnly;
    c.wait_coupling = WaitCoupling::Independent;
    c.drift = DriftKind::CutoffBurgers;
    c.seed = 18446744073709551615ull;
    c.gamma_interp = 0.6;
    std::ostringstream out;
    write_config(out, c);
    EXPECT_EQ(parse(out.str()), c);
}

TEST(Config, CommentsAndBlankLines) {
    const ExperimentConfig c = parse("# header\n\nexperiment = ou_validate  # trailing\n  n=16\nM = 7\n");
    EXPECT_EQ(c.experiment, ExperimentKind::OuValidate);
    EXPECT_EQ(c.n, 16u);
    EXPECT_EQ(c.M, 7u);
}

TEST(Config, Errors) {
    EXPECT_THROW(parse("bogus = 1\n"), ConfigError);
    EXPECT_THROW(parse("n = 4\nn = 5\n"), ConfigError);
    EXPECT_THROW(parse("dt = fast\n"), ConfigError);
    EXPECT_THROW(parse("n 4\n"), ConfigError);
    EXPECT_THROW(parse("drift = heat\n"), ConfigError);
    EXPECT_THROW(parse("x1 = sine(1\n"), ConfigError);
    EXPECT_THROW(parse("dt = -1\n"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/dir/x.cfg"), ConfigError);
}

TEST(Config, ErrorNamesTheLine) {
    try {
        parse("n = 4\n\nM = x\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find('3'), std::string::npos) << e.what();
    }
}

TEST(Profile, ParseAndPrint) {
    EXPECT_EQ(parse_profile("zero"), Profile{});
    EXPECT_EQ(parse_profile("sine(3, -0.25)"), (Profile{Profile::Kind::Sine, 3, -0.25}));
    EXPECT_EQ(parse_profile("constant(2)"), (Profile{Profile::Kind::Constant, 1, 2.0}));
    EXPECT_EQ(parse_profile(to_string(Profile{Profile::Kind::Sine, 2, 0.7})), (Profile{Profile::Kind::Sine, 2, 0.7}));
    EXPECT_THROW(parse_profile("cosine(1,1)"), ConfigError);
}

TEST(Profile, SineHasAmplitudeAsL2Norm) {
    const Grid g = make_grid(31);
    const Field u = make_profile(g, Profile{Profile::Kind::Sine, 1, 0.5});
    const Field v = make_profile(g, Profile{Profile::Kind::Sine, 1, -0.5});
    EXPECT_NEAR(norm(u, NormKind::L2), 0.5, 1e-13);
    EXPECT_NEAR(norm(u - v, NormKind::L2), 1.0, 1e-13);
    const Field c = make_profile(g, Profile{Profile::Kind::Constant, 1, 2.0});
    for (double x : c.values) EXPECT_EQ(x, 2.0);
}

TEST(Config, DefaultsPerKindAreValid) {
    for (ExperimentKind k : {ExperimentKind::RdCouple, ExperimentKind::BurgersStaged, ExperimentKind::OuValidate,
                             ExperimentKind::LyapunovBuild, ExperimentKind::GeneratorCheck, ExperimentKind::Calibrate}) {
        const ExperimentConfig c = default_config(k);
        EXPECT_EQ(c.experiment, k);
        EXPECT_NO_THROW(c.validate()) << to_string(k);
        EXPECT_EQ(parse_experiment_kind(to_string(k)), k);
    }
}

TEST(Config, ShippedConfigsLoad) {
    std::size_t count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(SPD_CONFIG_DIR)) {
        if (entry.path().extension() != ".cfg") continue;
        ++count;
        ExperimentConfig c;
        ASSERT_NO_THROW(c = load_config(entry.path().string())) << entry.path();
        EXPECT_NO_THROW(c.validate()) << entry.path();
    }
    EXPECT_GE(count, 9u);
}
