#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "p2pem/problem.hpp"
#include "p2pem/rng.hpp"
#include "p2pem/scenario_io.hpp"
#include "support/fixtures.hpp"
#include "support/random_instance.hpp"

using namespace p2pem;
using testing::pair_instance;
using testing::scenario_path;

TEST_CASE("six-prosumer scenario builds with the documented layout") {
    auto inst = load_scenario(scenario_path("six_prosumer.json"));
    CHECK(inst.prosumer_count() == 6);
    CHECK(inst.horizon == 4);
    CHECK(inst.edge_count() == 8);
    CHECK(inst.primal_dim() == 4 * 16);  // sum of degrees is 2|E|
    CHECK(inst.dual_dim() == 2 * 4 * 8);

    // prosumers 1,3,5 sell at periods 1 and 3, buy at 2 and 4
    for (int i : {0, 2, 4}) {
        CHECK(inst.role(i, 0) == Role::seller);
        CHECK(inst.role(i, 1) == Role::buyer);
        CHECK(inst.role(i, 2) == Role::seller);
        CHECK(inst.role(i, 3) == Role::buyer);
    }
    for (int i : {1, 3, 5}) CHECK(inst.role(i, 0) == Role::buyer);

    // all a strictly positive
    for (const auto& block : inst.costs.a)
        for (double a : block) CHECK(a > 0.0);
}

TEST_CASE("smallest layouts") {
    SUBCASE("single edge, one period") {
        auto inst = pair_instance(1.0, 1.0, 1.0, 1.0);
        CHECK(inst.local_dim(0) == 1);
        CHECK(inst.local_dim(1) == 1);
        Vec p{2.0};
        CHECK(xi_sums(inst, 0, p) == Vec{2.0});
        CHECK(omega_gather(inst, 0, 1, p) == Vec{2.0});
    }
    SUBCASE("two prosumers, two periods: coordinate of (j, t=2) is 1") {
        auto net = TradingNetwork::from_edges(2, {{0, 1}});
        RoleSchedule roles;
        roles.roles = {{Role::seller, Role::buyer}, {Role::seller, Role::buyer}};
        CostProfile costs;
        costs.a = {{1.0, 1.0}, {1.0, 1.0}};
        costs.b_trade = {{0.0, 0.0}, {0.0, 0.0}};
        costs.b_fee = costs.b_trade;
        costs.b_rep = costs.b_trade;
        costs.c = costs.b_trade;
        ConstraintProfile cons;
        cons.sum_min = {{0.0, 0.0}, {-5.0, -5.0}};
        cons.sum_max = {{5.0, 5.0}, {0.0, 0.0}};
        cons.loss = {{0.0, 0.0}};
        auto inst = build_instance(std::move(net), 2, std::move(roles), std::move(costs),
                                   std::move(cons));
        CHECK(inst.local_dim(0) == 2);
        CHECK(inst.coord(0, 0, 1) == 1);
        Vec p{3.0, 7.0};
        CHECK(omega_gather(inst, 0, 1, p) == Vec{3.0, 7.0});
    }
}

TEST_CASE("construction rejects invalid components") {
    auto base_net = [] { return TradingNetwork::from_edges(2, {{0, 1}}); };
    RoleSchedule roles;
    roles.roles = {{Role::seller, Role::buyer}};
    CostProfile costs;
    costs.a = {{1.0}, {1.0}};
    costs.b_trade = {{0.0}, {0.0}};
    costs.b_fee = costs.b_trade;
    costs.b_rep = costs.b_trade;
    costs.c = costs.b_trade;
    ConstraintProfile cons;
    cons.sum_min = {{0.0}, {-5.0}};
    cons.sum_max = {{5.0}, {0.0}};
    cons.loss = {{0.0}};

    SUBCASE("nonpositive quadratic coefficient") {
        auto bad = costs;
        bad.a[0][0] = 0.0;
        CHECK_THROWS_AS(build_instance(base_net(), 1, roles, bad, cons), std::invalid_argument);
    }
    SUBCASE("min above max") {
        auto bad = cons;
        bad.sum_min[0][0] = 6.0;
        CHECK_THROWS_AS(build_instance(base_net(), 1, roles, costs, bad), std::invalid_argument);
    }
    SUBCASE("disconnected graph") {
        auto net = TradingNetwork::from_edges(4, {{0, 1}, {2, 3}});
        RoleSchedule r4;
        r4.roles = {{Role::seller, Role::buyer, Role::seller, Role::buyer}};
        auto diags = validate_components(net, 1, r4, CostProfile{}, ConstraintProfile{});
        bool found = false;
        for (const auto& d : diags) found |= d.find("not connected") != std::string::npos;
        CHECK(found);
    }
    SUBCASE("self loop and duplicate edges") {
        CHECK_THROWS_AS(TradingNetwork::from_edges(2, {{0, 0}}), std::invalid_argument);
        CHECK_THROWS_AS(TradingNetwork::from_edges(2, {{0, 1}, {1, 0}}), std::invalid_argument);
    }
    SUBCASE("role schedule must cover each period") {
        RoleSchedule short_roles;  // horizon says 1, schedule is empty
        auto diags = validate_components(base_net(), 1, short_roles, costs, cons);
        CHECK(!diags.empty());
    }
}

TEST_CASE("cost value and gradient") {
    SUBCASE("zero input, zero cost") {
        auto inst = pair_instance(1.0, -4.0, 2.0, 2.0);
        CHECK(cost_value(inst, 0, Vec{0.0}) == 0.0);
        CHECK(cost_gradient(inst, 0, Vec{0.0}) == Vec{-4.0});
    }
    SUBCASE("direct evaluation with unit coefficients") {
        // a=1, b_trade=1, b_fee=1, b_rep=1 -> b = 1, cost(2) = 4 + 2 = 6
        auto net = TradingNetwork::from_edges(2, {{0, 1}});
        RoleSchedule roles;
        roles.roles = {{Role::seller, Role::buyer}};
        CostProfile costs;
        costs.a = {{1.0}, {1.0}};
        costs.b_trade = {{1.0}, {0.0}};
        costs.b_fee = {{1.0}, {0.0}};
        costs.b_rep = {{1.0}, {0.0}};
        costs.c = {{0.0}, {0.0}};
        ConstraintProfile cons;
        cons.sum_min = {{0.0}, {-5.0}};
        cons.sum_max = {{5.0}, {0.0}};
        cons.loss = {{0.0}};
        auto inst = build_instance(std::move(net), 1, std::move(roles), std::move(costs),
                                   std::move(cons));
        CHECK(cost_value(inst, 0, Vec{2.0}) == doctest::Approx(6.0).epsilon(1e-14));
    }
    SUBCASE("scalar gradient 2 a p + b") {
        auto inst = pair_instance(1.0, 3.0, 1.0, 0.0);
        CHECK(cost_gradient(inst, 0, Vec{2.0}) == Vec{7.0});
    }
    SUBCASE("dimension mismatch rejected") {
        auto inst = pair_instance(1.0, 0.0, 1.0, 0.0);
        CHECK_THROWS_AS(cost_value(inst, 0, Vec{1.0, 2.0}), std::invalid_argument);
        CHECK_THROWS_AS(cost_gradient(inst, 0, Vec{}), std::invalid_argument);
    }
}

TEST_CASE("cost matches the term-by-term tariff sum on random points") {
    Rng rng(11);
    auto inst = load_scenario(scenario_path("six_prosumer.json"));
    for (int rep = 0; rep < 20; ++rep) {
        const int i = rng.next_int(inst.prosumer_count());
        const int deg = inst.network.degree(i);
        Vec p(inst.local_dim(i));
        for (auto& x : p) x = rng.uniform(-3.0, 3.0);

        // independent evaluation: loop the three tariffs over (j, t)
        double expected = 0.0;
        for (int t = 0; t < inst.horizon; ++t)
            for (int s = 0; s < deg; ++s) {
                const int c = t * deg + s;
                const double traded = p[c];
                expected += inst.costs.a[i][c] * traded * traded +
                            inst.costs.b_trade[i][c] * traded;      // trading cost
                expected += inst.costs.b_fee[i][c] * traded;        // network fee
                expected -= inst.costs.b_rep[i][c] * traded;        // reputation income
            }
        CHECK(cost_value(inst, i, p) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("gradient agrees with central finite differences") {
    Rng rng(12);
    auto inst = load_scenario(scenario_path("six_prosumer.json"));
    int checked = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const int i = rng.next_int(inst.prosumer_count());
        Vec p(inst.local_dim(i));
        for (auto& x : p) x = rng.uniform(-3.0, 3.0);
        const Vec g = cost_gradient(inst, i, p);
        const double h = 1e-6;
        for (std::size_t c = 0; c < p.size(); ++c) {
            Vec hi = p, lo = p;
            hi[c] += h;
            lo[c] -= h;
            const double fd = (cost_value(inst, i, hi) - cost_value(inst, i, lo)) / (2 * h);
            const double scale = std::max(1.0, std::abs(g[c]));
            CHECK(std::abs(fd - g[c]) / scale <= 1e-6);
            ++checked;
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("quadratic part scales as s^2, linear part as s") {
    Rng rng(13);
    auto inst = load_scenario(scenario_path("six_prosumer.json"));
    for (double s : {2.0, 10.0}) {
        for (int rep = 0; rep < 10; ++rep) {
            const int i = rng.next_int(inst.prosumer_count());
            Vec p(inst.local_dim(i));
            for (auto& x : p) x = rng.uniform(-2.0, 2.0);
            double quad = 0.0, lin = 0.0;
            for (std::size_t c = 0; c < p.size(); ++c) {
                quad += inst.costs.a[i][c] * p[c] * p[c];
                lin += inst.lin_b[i][c] * p[c];
            }
            Vec ps(p.size());
            for (std::size_t c = 0; c < p.size(); ++c) ps[c] = s * p[c];
            CHECK(cost_value(inst, i, ps) ==
                  doctest::Approx(s * s * quad + s * lin).epsilon(1e-12));
        }
    }
}

TEST_CASE("selection maps agree with direct loops") {
    Rng rng(14);
    auto inst = load_scenario(scenario_path("six_prosumer.json"));
    std::vector<Vec> p(inst.prosumer_count());
    for (int i = 0; i < inst.prosumer_count(); ++i) {
        p[i].resize(inst.local_dim(i));
        for (auto& x : p[i]) x = rng.uniform(-5.0, 5.0);
    }

    for (int i = 0; i < inst.prosumer_count(); ++i) {
        const int deg = inst.network.degree(i);
        Vec sums = xi_sums(inst, i, p[i]);
        for (int t = 0; t < inst.horizon; ++t) {
            double direct = 0.0;
            for (int s = 0; s < deg; ++s) direct += p[i][t * deg + s];
            CHECK(sums[t] == direct);  // exact: same additions in the same order
        }
    }

    for (int e = 0; e < inst.edge_count(); ++e) {
        auto [i, j] = inst.network.edges[e];
        Vec stacked = psi_pair(inst, e, p[i], p[j]);
        Vec qi = omega_gather(inst, i, j, p[i]);
        Vec qj = omega_gather(inst, j, i, p[j]);
        for (int t = 0; t < inst.horizon; ++t) {
            CHECK(stacked[t] == qi[t]);
            CHECK(stacked[inst.horizon + t] == qj[t]);
        }
    }
}

TEST_CASE("smoothness constants") {
    SUBCASE("uniform coefficients") {
        auto inst = pair_instance(1.0, 0.0, 1.0, 0.0);
        auto sc = smoothness_constants(inst);
        CHECK(sc.lipschitz == 2.0);
        CHECK(sc.strong_convexity == 2.0);
        CHECK(sc.condition_number == 1.0);
    }
    SUBCASE("max/min scan") {
        auto inst = pair_instance(0.5, 0.0, 2.0, 0.0);
        auto sc = smoothness_constants(inst);
        CHECK(sc.lipschitz == 4.0);
        CHECK(sc.strong_convexity == 1.0);
        CHECK(sc.condition_number == 4.0);
    }
    SUBCASE("condition number matches the dense Hessian spectrum") {
        Rng rng(15);
        for (int rep = 0; rep < 10; ++rep) {
            auto inst = testing::random_instance(rng, 4, 2);
            auto sc = smoothness_constants(inst);
            // Hessian of sum_i p_i'A_i p_i is blockdiag(2 A_i), diagonal here
            Eigen::VectorXd h(inst.primal_dim());
            int pos = 0;
            for (int i = 0; i < inst.prosumer_count(); ++i)
                for (double a : inst.costs.a[i]) h(pos++) = 2.0 * a;
            const double kappa = h.maxCoeff() / h.minCoeff();
            CHECK(sc.condition_number == doctest::Approx(kappa).epsilon(1e-12));
            CHECK(sc.lipschitz == doctest::Approx(h.maxCoeff()).epsilon(1e-12));
        }
    }
}
