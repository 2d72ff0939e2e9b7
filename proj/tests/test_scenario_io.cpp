#include <doctest.h>

#include "p2pem/scenario_io.hpp"
#include "support/fixtures.hpp"

using namespace p2pem;
using testing::scenario_path;

TEST_CASE("shipped scenarios validate cleanly") {
    CHECK(validate_scenario_file(scenario_path("six_prosumer.json")).empty());
    CHECK(validate_scenario_file(scenario_path("two_prosumer.json")).empty());
}

TEST_CASE("parse failures carry context") {
    CHECK_THROWS_AS(parse_scenario("{ not json", "inline"), ScenarioParseError);
    CHECK_THROWS_AS(parse_scenario(R"({"prosumers": 2})", "inline"), ScenarioParseError);
    CHECK_THROWS_WITH_AS(parse_scenario(R"({"prosumers": 0, "horizon": 1,
        "roles": [], "edges": [], "bounds": []})", "inline"),
                         doctest::Contains("prosumers"), ScenarioParseError);
}

TEST_CASE("invariant violations are diagnosed, not silently accepted") {
    // a = 0 on one side breaks strict convexity
    const char* bad_a = R"({
      "prosumers": 2, "horizon": 1, "roles": [[1]],
      "edges": [{"between": [1, 2], "loss": [0.0],
        "a": {"1": [0.0], "2": [1.0]},
        "b_trade": {"1": [0.0], "2": [0.0]},
        "b_fee": {"1": [0.0], "2": [0.0]},
        "b_rep": {"1": [0.0], "2": [0.0]},
        "c": {"1": [0.0], "2": [0.0]}}],
      "bounds": [{"min": [0.0], "max": [5.0]}, {"min": [-5.0], "max": [0.0]}]
    })";
    CHECK_THROWS_WITH_AS(parse_scenario(bad_a, "inline"),
                         doctest::Contains("strictly positive"), std::invalid_argument);
}

TEST_CASE("two-prosumer scenario matches the analytic fixture") {
    auto inst = load_scenario(scenario_path("two_prosumer.json"));
    CHECK(inst.prosumer_count() == 2);
    CHECK(inst.horizon == 1);
    CHECK(inst.costs.a[0][0] == 1.0);
    CHECK(inst.costs.a[1][0] == 2.0);
    CHECK(inst.lin_b[0][0] == -4.0);
    CHECK(inst.lin_b[1][0] == 2.0);
    CHECK(inst.role(0, 0) == Role::seller);
    CHECK(inst.role(1, 0) == Role::buyer);
}

TEST_CASE("sim config parsing") {
    auto parsed = parse_sim_config(R"({
      "seed": 42,
      "activation_rates": [1.0, 3.0],
      "delay": {"mode": "fixed", "d": 7},
      "theta": 0.5,
      "timing": {"compute_ms": 2.0, "latency_ms": 1.5},
      "stop": {"tol": 1e-6, "max_ticks": 1234}
    })", 2);
    CHECK(parsed.sim.seed == 42);
    CHECK(parsed.sim.activation.probabilities[1] == doctest::Approx(0.75));
    CHECK(parsed.sim.delay.mode == DelayModel::Mode::fixed);
    CHECK(parsed.sim.delay.bound == 7);
    CHECK(parsed.sim.theta == 0.5);
    CHECK(parsed.sim.timing.compute_ms == Vec{2.0, 2.0});
    CHECK(parsed.sim.timing.latency_ms == 1.5);
    CHECK(parsed.stop.tol == 1e-6);
    CHECK(parsed.stop.max_ticks == 1234);

    CHECK_THROWS_AS(parse_sim_config(R"({"delay": {"mode": "warp"}})", 2), ScenarioParseError);
}
