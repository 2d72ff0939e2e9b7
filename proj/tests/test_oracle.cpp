#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "p2pem/oracle.hpp"
#include "p2pem/rng.hpp"
#include "p2pem/scenario_io.hpp"
#include "support/fixtures.hpp"
#include "support/random_instance.hpp"

using namespace p2pem;
using testing::analytic_pair;
using testing::pair_instance;
using testing::scenario_path;

namespace {

double inf_diff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t c = 0; c < a[i].size(); ++c)
            m = std::max(m, std::abs(a[i][c] - b[i][c]));
    return m;
}

}  // namespace

TEST_CASE("reference solver recovers the analytic optimum") {
    auto inst = analytic_pair();
    auto sol = solve_reference(inst);
    CHECK(sol.p_star[0][0] == doctest::Approx(testing::kAnalyticP1).epsilon(1e-9));
    CHECK(sol.p_star[1][0] == doctest::Approx(testing::kAnalyticP2).epsilon(1e-9));
    CHECK(sol.w_star[0][0][0] == doctest::Approx(testing::kAnalyticPrice).epsilon(1e-7));
    CHECK(sol.w_star[0][1][0] == doctest::Approx(testing::kAnalyticPrice).epsilon(1e-7));
    CHECK(sol.objective == doctest::Approx(-3.0).epsilon(1e-9));
    CHECK(sol.residual.stationarity <= 1e-8);
    CHECK(sol.residual.coupling <= 1e-8);

    auto grid = brute_force_primal(inst);
    CHECK(inf_diff(sol.p_star, grid) <= 2e-3);
}

TEST_CASE("zero-loss, zero-linear instance has the trivial solution") {
    auto inst = pair_instance(1.0, 0.0, 2.0, 0.0);
    auto sol = solve_reference(inst);
    CHECK(std::abs(sol.p_star[0][0]) <= 1e-10);
    CHECK(std::abs(sol.p_star[1][0]) <= 1e-10);
    CHECK(std::abs(sol.w_star[0][0][0]) <= 1e-8);
    CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("kkt residual semantics") {
    auto inst = analytic_pair();
    SUBCASE("vanishes at the reference solution") {
        auto sol = solve_reference(inst);
        auto res = kkt_residual(inst, sol.p_star, sol.w_star);
        CHECK(res.stationarity <= 1e-6);
        CHECK(res.coupling <= 1e-6);
    }
    SUBCASE("zero state on a lossy edge shows the loss in the coupling") {
        auto lossy = pair_instance(1.0, -4.0, 2.0, 2.0, 0.75);
        std::vector<Vec> p{{0.0}, {0.0}};
        std::vector<std::array<Vec, 2>> w{{Vec{0.0}, Vec{0.0}}};
        auto res = kkt_residual(lossy, p, w);
        CHECK(res.coupling == doctest::Approx(0.75).epsilon(1e-14));
    }
    SUBCASE("interior point with zero gradient is stationary") {
        auto flat = pair_instance(1.0, 0.0, 1.0, 0.0);
        std::vector<Vec> p{{0.0}, {0.0}};  // gradient 2 a 0 + 0 = 0, strictly inside
        std::vector<std::array<Vec, 2>> w{{Vec{0.0}, Vec{0.0}}};
        auto res = kkt_residual(flat, p, w);
        CHECK(res.stationarity == 0.0);
    }
}

TEST_CASE("six-prosumer reference solution is tight and cacheable") {
    auto inst = load_scenario(scenario_path("six_prosumer.json"));
    auto sol = solve_reference(inst);
    CHECK(sol.residual.stationarity <= 1e-8);
    CHECK(sol.residual.coupling <= 1e-8);

    // bilateral reciprocity holds at the optimum
    for (int e = 0; e < inst.edge_count(); ++e) {
        auto [i, j] = inst.network.edges[e];
        Vec qi = omega_gather(inst, i, j, sol.p_star[i]);
        Vec qj = omega_gather(inst, j, i, sol.p_star[j]);
        for (int t = 0; t < inst.horizon; ++t)
            CHECK(std::abs(qi[t] + qj[t] - inst.constraints.loss[e][t]) <= 1e-9);
    }

    const std::string path = "oracle_cache_test.json";
    save_oracle(sol, path);
    auto loaded = load_oracle(inst, path);
    CHECK(inf_diff(loaded.p_star, sol.p_star) == 0.0);
    CHECK(loaded.objective == sol.objective);
    std::remove(path.c_str());
}

TEST_CASE("oracle objective is optimal against random feasible points") {
    Rng rng(31);
    auto inst = load_scenario(scenario_path("six_prosumer.json"));
    auto sol = solve_reference(inst);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<Vec> probe(inst.prosumer_count());
        for (int i = 0; i < inst.prosumer_count(); ++i) {
            probe[i].resize(inst.local_dim(i));
            for (auto& x : probe[i]) x = rng.uniform(-4.0, 4.0);
        }
        probe = project_intersection(inst, probe);
        double value = 0.0;
        for (int i = 0; i < inst.prosumer_count(); ++i) value += cost_value(inst, i, probe[i]);
        CHECK(value >= sol.objective - 1e-9);
    }
}

TEST_CASE("oracle matches exhaustive search on small instances") {
    Rng rng(32);
    for (int rep = 0; rep < 5; ++rep) {
        auto inst = testing::random_instance(rng, 2, 1);  // primal dimension 2
        auto sol = solve_reference(inst);
        auto grid = brute_force_primal(inst);
        CHECK(inf_diff(sol.p_star, grid) <= 2e-3);
    }
    // three periods on one edge: primal dimension 6
    auto inst = testing::random_instance(rng, 2, 3);
    auto sol = solve_reference(inst);
    auto grid = brute_force_primal(inst);
    CHECK(inf_diff(sol.p_star, grid) <= 2e-3);
}

TEST_CASE("infeasible instance is detected by the projection gap") {
    // both endpoints capped at tiny sums but the loss forces a large trade
    auto net = TradingNetwork::from_edges(2, {{0, 1}});
    RoleSchedule roles;
    roles.roles = {{Role::seller, Role::buyer}};
    CostProfile costs;
    costs.a = {{1.0}, {1.0}};
    costs.b_trade = {{0.0}, {0.0}};
    costs.b_fee = costs.b_trade;
    costs.b_rep = costs.b_trade;
    costs.c = costs.b_trade;
    ConstraintProfile cons;
    cons.sum_min = {{0.0}, {-10.0}};
    cons.sum_max = {{0.5}, {0.0}};
    cons.loss = {{2.0}};  // needs seller sum >= 2 > 0.5
    auto inst = build_instance(std::move(net), 1, std::move(roles), std::move(costs),
                               std::move(cons));
    std::vector<Vec> p0{{0.0}, {0.0}};
    CHECK_THROWS_AS(project_intersection(inst, p0, 1e-13, 2000), std::runtime_error);
}
