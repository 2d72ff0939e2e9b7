#ifndef P2PEM_TESTS_FIXTURES_HPP
#define P2PEM_TESTS_FIXTURES_HPP

#include <string>

#include "p2pem/problem.hpp"

namespace p2pem::testing {

inline std::string scenario_path(const char* name) {
    return std::string(P2PEM_SCENARIO_DIR) + "/" + name;
}

/* Single edge (0,1), one period, prosumer 0 selling to prosumer 1. */
inline ProblemInstance pair_instance(double a0, double b0, double a1, double b1,
                                     double loss = 0.0, double cap = 10.0) {
    auto net = TradingNetwork::from_edges(2, {{0, 1}});
    RoleSchedule roles;
    roles.roles = {{Role::seller, Role::buyer}};
    CostProfile costs;
    costs.a = {{a0}, {a1}};
    costs.b_trade = {{b0}, {b1}};
    costs.b_fee = {{0.0}, {0.0}};
    costs.b_rep = {{0.0}, {0.0}};
    costs.c = {{0.0}, {0.0}};
    ConstraintProfile cons;
    cons.sum_min = {{0.0}, {-cap}};
    cons.sum_max = {{cap}, {0.0}};
    cons.loss = {{loss}};
    return build_instance(std::move(net), 1, std::move(roles), std::move(costs), std::move(cons));
}

/* min p1^2 - 4 p1 + 2 p2^2 + 2 p2 over p1 + p2 = 0, p1 in [0,10],
 * p2 in [-10,0].  Substituting p2 = -p1 gives 3 p1^2 - 6 p1, so the
 * optimum is p* = (1, -1); stationarity then forces the price w* = 2 on
 * both halves. */
inline ProblemInstance analytic_pair() { return pair_instance(1.0, -4.0, 2.0, 2.0); }

inline constexpr double kAnalyticP1 = 1.0;
inline constexpr double kAnalyticP2 = -1.0;
inline constexpr double kAnalyticPrice = 2.0;

}  // namespace p2pem::testing

#endif
