#include "p2pem/sync_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace p2pem {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

/* Intermediate prices, one per edge; identical at both endpoints. */
std::vector<Vec> edge_prices(const ProblemInstance& inst, const StepConfig& steps,
                             const SolverState& state) {
    std::vector<Vec> wbar(inst.edge_count());
    for (int e = 0; e < inst.edge_count(); ++e) {
        auto [i, j] = inst.network.edges[e];
        Vec qi = omega_gather(inst, i, j, state.p[i]);
        Vec qj = omega_gather(inst, j, i, state.p[j]);
        wbar[e] = edge_prox(steps.beta[e], state.w[e][0], state.w[e][1], qi, qj,
                            inst.constraints.loss[e]);
    }
    return wbar;
}

}  // namespace

SolverState syn_step_ordered(const ProblemInstance& inst, const StepConfig& steps,
                             const SolverState& state, std::span<const int> order) {
    SolverState next = state;
    next.iter = state.iter + 1;

    // (a) intermediate dual, from the k-snapshot
    const auto wbar = edge_prices(inst, steps, state);

    // (b) projected gradient step per prosumer; reads target the snapshot
    // only, so the processing order is immaterial
    for (int i : order) {
        Vec g = cost_gradient(inst, i, state.p[i]);
        for (int j : inst.network.neighbors[i])
            omega_scatter_add(inst, i, j, wbar[inst.edge_index(i, j)], g);
        Vec shifted(g.size());
        for (std::size_t c = 0; c < g.size(); ++c)
            shifted[c] = state.p[i][c] - steps.alpha[i] * g[c];
        next.p[i] = project_prosumer(inst, i, shifted);
    }

    // (c) dual update from the primal movement
    for (int e = 0; e < inst.edge_count(); ++e) {
        auto [i, j] = inst.network.edges[e];
        for (int side = 0; side < 2; ++side) {
            const int owner = side == 0 ? i : j;
            const int peer = side == 0 ? j : i;
            Vec q_new = omega_gather(inst, owner, peer, next.p[owner]);
            Vec q_old = omega_gather(inst, owner, peer, state.p[owner]);
            for (int t = 0; t < inst.horizon; ++t)
                next.w[e][side][t] = wbar[e][t] + steps.beta[e] * (q_new[t] - q_old[t]);
        }
    }
    return next;
}

SolverState syn_step(const ProblemInstance& inst, const StepConfig& steps,
                     const SolverState& state) {
    std::vector<int> order(inst.prosumer_count());
    std::iota(order.begin(), order.end(), 0);
    return syn_step_ordered(inst, steps, state, order);
}

SyncRunResult run_syn(const ProblemInstance& inst, const StepConfig& steps,
                      const SolverState& init, const StopRule& stop,
                      const SyncRunOptions& options) {
    if (!(stop.tol > 0.0)) throw std::invalid_argument("run_syn: tol must be positive");
    if (stop.max_iter < 1) throw std::invalid_argument("run_syn: max_iter must be >= 1");

    const auto weights = ts_weights(inst, steps);
    const std::int64_t messages_per_round = 2 * inst.edge_count();
    double round_ms = options.latency_ms;
    if (options.compute_ms.empty())
        round_ms += 1.0;
    else
        round_ms += *std::max_element(options.compute_ms.begin(), options.compute_ms.end());

    SyncRunResult result;
    result.state = init;
    result.state.iter = 0;

    std::vector<double> prev_u;
    std::int64_t messages = 0;
    double sim_time = 0.0;

    while (true) {
        const auto u = pack_state(inst, result.state);
        const auto kkt = kkt_residual(inst, result.state.p, result.state.w);

        ReportRecord rec;
        rec.k = result.state.iter;
        rec.coupling = kkt.coupling;
        rec.stationarity = kkt.stationarity;
        rec.dist_ts = options.u_star ? weights.dist(u, *options.u_star) : kNan;
        rec.fejer_slack = (options.u_star && !prev_u.empty())
                              ? fejer_slack(weights, u, prev_u, *options.u_star)
                              : kNan;
        rec.messages = messages;
        rec.sim_time_ms = sim_time;
        result.report.records.push_back(rec);

        const double successive =
            prev_u.empty() ? std::numeric_limits<double>::infinity() : weights.dist(u, prev_u);
        if (std::max(kkt.coupling, successive) <= stop.tol) {
            result.converged = true;
            break;
        }
        if (result.state.iter >= stop.max_iter) break;

        prev_u = u;
        result.state = syn_step(inst, steps, result.state);
        if (!result.state.finite())
            throw DivergenceError("run_syn: non-finite iterate at k = " +
                                  std::to_string(result.state.iter) +
                                  " (step sizes violate their bound)");
        messages += messages_per_round;
        sim_time += round_ms;
    }
    return result;
}

}  // namespace p2pem
