#include <gtest/gtest.h>

#include <functional>
#include <string>
#include <vector>

#include "cogflow/config.hpp"
#include "cogflow/errors.hpp"

namespace cogflow {
namespace {

std::string message_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

TEST(ConfigParse, EmptyTextYieldsDefaults) {
    const RunConfig c = parse_config("");
    EXPECT_EQ(c.experiment, "all");
    EXPECT_EQ(c.potential, "all");
    EXPECT_EQ(c.composite_weight_cubic, 1.0);
    EXPECT_EQ(c.composite_weight_decision, 1.0);
    EXPECT_EQ(c.epsilons, (std::vector<double>{0.4, 0.2, 0.1, 0.05}));
    EXPECT_EQ(c.reduction_epsilons, (std::vector<double>{0.4, 0.3, 0.2, 0.15, 0.1}));
    EXPECT_EQ(c.dt, 0.01);
    EXPECT_EQ(c.record_stride, 1);
    EXPECT_TRUE(c.t_end_scaled);
    EXPECT_EQ(c.initial_state[0], 1.5);
    EXPECT_EQ(c.initial_state[1], -1.0);
    EXPECT_EQ(c.reduction_c0, 1.0);
    EXPECT_EQ(c.decision_c0, 1.0);
    EXPECT_EQ(c.seed, 67890u);
    EXPECT_EQ(c.beta, 2.0);
    EXPECT_EQ(c.ramp_start, 0.0);
    EXPECT_EQ(c.ramp_end, 40.0);
    EXPECT_EQ(c.ramp_level, 0.5);
    EXPECT_EQ(c.t_kick, 8.0);
    EXPECT_EQ(c.kick_delta.size(), 1);
    EXPECT_EQ(c.kick_target, "fast");
    EXPECT_EQ(c.reduction_cutoff, 5.0);
    EXPECT_FALSE(c.epsilon.has_value());
    EXPECT_FALSE(c.t_end.has_value());
    EXPECT_FALSE(c.slope_bounds.has_value());
}

TEST(ConfigParse, CommentsBlanksAndPaddingAreTolerated) {
    const RunConfig c = parse_config(
        "# run shape\n"
        "\n"
        "  experiment   =  decision \r\n"
        "\t epsilon = 0.25\n"
        "epsilons = 0.4 , 0.2,0.1\n");
    EXPECT_EQ(c.experiment, "decision");
    ASSERT_TRUE(c.epsilon.has_value());
    EXPECT_EQ(*c.epsilon, 0.25);
    EXPECT_EQ(c.epsilons, (std::vector<double>{0.4, 0.2, 0.1}));
}

TEST(ConfigParse, EveryKeyIsSettable) {
    const RunConfig c = parse_config(
        "experiment = reduction\n"
        "potential = composite\n"
        "composite_weight_cubic = 0.7\n"
        "composite_weight_decision = 0.3\n"
        "epsilons = 0.3, 0.2, 0.15\n"
        "reduction_epsilons = 0.3, 0.2\n"
        "dt = 0.005\n"
        "record_stride = 4\n"
        "t_end_scaled = false\n"
        "initial_state = 0.5, 0.25\n"
        "reduction_c0 = 0.8\n"
        "decision_c0 = -1\n"
        "seed = 99\n"
        "beta = 3\n"
        "ramp_start = 2\n"
        "ramp_end = 12\n"
        "ramp_level = 0.45\n"
        "t_kick = 6\n"
        "kick_delta = 0.5, -0.5\n"
        "kick_target = full\n"
        "reduction_cutoff = 3\n"
        "epsilon = 0.2\n"
        "t_end = 170\n"
        "slope_bounds = 1.7, 2.3\n");
    EXPECT_EQ(c.experiment, "reduction");
    EXPECT_EQ(c.potential, "composite");
    EXPECT_EQ(c.composite_weight_cubic, 0.7);
    EXPECT_EQ(c.composite_weight_decision, 0.3);
    EXPECT_EQ(c.dt, 0.005);
    EXPECT_EQ(c.record_stride, 4);
    EXPECT_FALSE(c.t_end_scaled);
    EXPECT_EQ(c.decision_c0, -1.0);
    EXPECT_EQ(c.seed, 99u);
    EXPECT_EQ(c.kick_delta.size(), 2);
    EXPECT_EQ(c.kick_target, "full");
    ASSERT_TRUE(c.slope_bounds.has_value());
    EXPECT_EQ(c.slope_bounds->lo, 1.7);
    EXPECT_EQ(c.slope_bounds->hi, 2.3);
    ASSERT_TRUE(c.t_end.has_value());
    EXPECT_EQ(*c.t_end, 170.0);
}

TEST(ConfigParse, UnknownKeyNamesItsLine) {
    const std::string msg =
        message_of([] { parse_config("dt = 0.01\ntypo_key = 3\n"); });
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("typo_key"), std::string::npos) << msg;
}

TEST(ConfigParse, DuplicateKeyNamesBothLines) {
    const std::string msg = message_of(
        [] { parse_config("dt = 0.01\nseed = 5\n\ndt = 0.02\n"); });
    EXPECT_NE(msg.find("duplicate key 'dt'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("lines 1 and 4"), std::string::npos) << msg;
}

TEST(ConfigParse, EpsilonDomainErrorsNameTheirSource) {
    const std::string from_file = message_of([] { parse_config("epsilon = 1.5\n"); });
    EXPECT_EQ(from_file, "line 1: epsilon must lie in (0,1)");

    RunConfig c;
    const std::string from_set = message_of([&c] { apply_override(c, "epsilon=0", 2); });
    EXPECT_EQ(from_set, "--set 2: epsilon must lie in (0,1)");

    EXPECT_THROW(parse_config("epsilons = 0.4, 1.0\n"), ConfigError);
}

TEST(ConfigParse, MalformedLinesAreRejected) {
    EXPECT_NE(message_of([] { parse_config("just words\n"); }).find("expected key = value"),
              std::string::npos);
    EXPECT_NE(message_of([] { parse_config("= 3\n"); }).find("empty key"), std::string::npos);
    const std::string msg = message_of([] { parse_config("dt = abc\n"); });
    EXPECT_NE(msg.find("invalid number 'abc'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'dt'"), std::string::npos) << msg;
    EXPECT_NE(message_of([] { parse_config("epsilons = 0.4,,0.1\n"); }).find("empty number"),
              std::string::npos);
}

TEST(ConfigParse, ValueValidationPerKey) {
    EXPECT_THROW(parse_config("dt = 0\n"), ConfigError);
    EXPECT_THROW(parse_config("dt = -0.01\n"), ConfigError);
    EXPECT_THROW(parse_config("t_end = 0\n"), ConfigError);
    EXPECT_THROW(parse_config("record_stride = 0\n"), ConfigError);
    EXPECT_THROW(parse_config("record_stride = 1.5\n"), ConfigError);
    EXPECT_THROW(parse_config("seed = -1\n"), ConfigError);
    EXPECT_THROW(parse_config("beta = 0\n"), ConfigError);
    EXPECT_THROW(parse_config("t_kick = -1\n"), ConfigError);
    EXPECT_THROW(parse_config("reduction_cutoff = -2\n"), ConfigError);
    EXPECT_THROW(parse_config("slope_bounds = 2.3, 1.7\n"), ConfigError);
    EXPECT_THROW(parse_config("slope_bounds = 1.7\n"), ConfigError);
    EXPECT_THROW(parse_config("initial_state = 1.5\n"), ConfigError);
    EXPECT_THROW(parse_config("kick_target = sideways\n"), ConfigError);
    EXPECT_THROW(parse_config("experiment = warmup\n"), ConfigError);
    EXPECT_THROW(parse_config("potential = quartic\n"), ConfigError);
    EXPECT_THROW(parse_config("composite_weight_cubic = -0.1\n"), ConfigError);
    EXPECT_THROW(parse_config("t_end_scaled = yes\n"), ConfigError);
}

TEST(ConfigOverride, LaterAssignmentsWin) {
    RunConfig c;
    apply_override(c, "experiment=scaling", 1);
    apply_override(c, "experiment=decision", 2);
    EXPECT_EQ(c.experiment, "decision");
    EXPECT_THROW(apply_override(c, "experiment decision", 3), ConfigError);
    const std::string msg =
        message_of([&c] { apply_override(c, "mystery=1", 4); });
    EXPECT_NE(msg.find("--set 4"), std::string::npos) << msg;
}

TEST(ConfigEcho, RoundTripsByteForByte) {
    const RunConfig defaults;
    const std::string echoed = effective_config_text(defaults);
    EXPECT_EQ(effective_config_text(parse_config(echoed)), echoed);

    RunConfig custom = parse_config(
        "experiment = decision\n"
        "epsilon = 0.2\n"
        "t_end = 170\n"
        "slope_bounds = 1.7, 2.3\n"
        "kick_delta = 0.25, -0.75\n"
        "dt = 0.02\n");
    const std::string custom_echo = effective_config_text(custom);
    EXPECT_EQ(effective_config_text(parse_config(custom_echo)), custom_echo);
}

TEST(ConfigEcho, FixedKeyOrderAndOptionalTail) {
    const RunConfig defaults;
    const std::string echoed = effective_config_text(defaults);
    EXPECT_EQ(echoed.rfind("experiment = all\npotential = all\n", 0), 0u) << echoed;
    EXPECT_NE(echoed.find("\ndt = 0.01\n"), std::string::npos);
    EXPECT_NE(echoed.find("\nseed = 67890\n"), std::string::npos);
    EXPECT_NE(echoed.find("\nt_end_scaled = true\n"), std::string::npos);
    EXPECT_EQ(echoed.find("epsilon ="), std::string::npos);  // unset optionals stay silent
    EXPECT_EQ(echoed.find("t_end ="), std::string::npos);
    EXPECT_EQ(echoed.find("slope_bounds"), std::string::npos);

    RunConfig with_optionals;
    with_optionals.epsilon = 0.25;
    with_optionals.t_end = 30.0;
    with_optionals.slope_bounds = SlopeBounds{1.8, 2.2};
    const std::string tail = effective_config_text(with_optionals);
    EXPECT_NE(tail.find("\nepsilon = 0.25\n"), std::string::npos) << tail;
    EXPECT_NE(tail.find("\nt_end = 30\n"), std::string::npos);
    EXPECT_NE(tail.find("\nslope_bounds = "), std::string::npos);
}

}  // namespace
}  // namespace cogflow
