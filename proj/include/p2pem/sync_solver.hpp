#ifndef P2PEM_SYNC_SOLVER_HPP
#define P2PEM_SYNC_SOLVER_HPP

#include <optional>
#include <stdexcept>

#include "p2pem/analysis.hpp"
#include "p2pem/problem.hpp"
#include "p2pem/projection.hpp"
#include "p2pem/state.hpp"

namespace p2pem {

/* Thrown when an iteration produces non-finite values; the step sizes
 * violate their bound. */
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/* One synchronous round with Jacobi semantics: every prosumer and edge is
 * advanced from the iterate-k snapshot.
 *
 *   wbar_(i,j)   = (beta/2)(q_i + q_j - loss) + (w_i + w_j)/2
 *   p_i^{k+1}    = P_{S_i}( p_i - alpha_i (2 A_i p_i + b_i + sum_j Omega' wbar) )
 *   w_(i,j),i^{k+1} = wbar + beta Omega_{ij} (p_i^{k+1} - p_i^k)
 *
 * `order` permutes the per-prosumer processing order; the result is
 * independent of it because nothing reads the k+1 values being written. */
SolverState syn_step(const ProblemInstance& inst, const StepConfig& steps,
                     const SolverState& state);
SolverState syn_step_ordered(const ProblemInstance& inst, const StepConfig& steps,
                             const SolverState& state, std::span<const int> order);

struct StopRule {
    double tol = 1e-8;
    std::int64_t max_iter = 100000;
};

struct SyncRunOptions {
    // reference solution for distance/Fejer columns, packed layout
    std::optional<std::vector<double>> u_star;
    // timing model for the simulated-time column (one round costs the
    // slowest compute plus one latency)
    Vec compute_ms;          // per prosumer; empty -> 1.0 each
    double latency_ms = 0.0;
};

struct SyncRunResult {
    SolverState state;
    ConvergenceReport report;
    bool converged = false;
};

/* Iterates syn_step until max(coupling, successive-iterate distance in the
 * step metric) <= tol, or max_iter rounds.  Throws DivergenceError on
 * non-finite state. */
SyncRunResult run_syn(const ProblemInstance& inst, const StepConfig& steps,
                      const SolverState& init, const StopRule& stop,
                      const SyncRunOptions& options = {});

}  // namespace p2pem

#endif
