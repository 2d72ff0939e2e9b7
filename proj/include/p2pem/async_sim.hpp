#ifndef P2PEM_ASYNC_SIM_HPP
#define P2PEM_ASYNC_SIM_HPP

#include <cstdint>
#include <deque>
#include <optional>

#include "p2pem/analysis.hpp"
#include "p2pem/problem.hpp"
#include "p2pem/rng.hpp"
#include "p2pem/state.hpp"
#include "p2pem/sync_solver.hpp"

namespace p2pem {

/* Independent per-tick agent activation with probabilities proportional
 * to the given rates. */
struct ActivationModel {
    Vec rates;          // pi_i > 0
    Vec probabilities;  // P_i = pi_i / sum(pi), filled by normalize()

    static ActivationModel uniform(int m);
    static ActivationModel from_rates(Vec rates);
    double p_min() const;
    double p_max() const;
    double condition_number() const { return p_max() / p_min(); }
    int sample(Rng& rng) const;
};

/* Staleness of buffer reads, bounded by d ticks.
 *   fixed          every foreign read is exactly d ticks old
 *   uniform_random staleness drawn uniformly from {0..d} per read
 *   sweep_snapshot deterministic round-robin; all reads within a sweep
 *                  reference the state at the sweep's first tick
 * Own-variable reads are fresh except under sweep_snapshot. */
struct DelayModel {
    enum class Mode { fixed, uniform_random, sweep_snapshot };
    Mode mode = Mode::uniform_random;
    int bound = 0;  // d >= 0
};

/* Reporting-only wall-clock model: per-activation compute cost per agent
 * and per-message latency, each drawn uniformly around its mean.  Uses a
 * separate random stream, so it never influences the dynamics. */
struct TimingModel {
    Vec compute_ms;        // per-agent means; empty -> 1.0 each
    double compute_jitter_ms = 0.0;
    double latency_ms = 0.0;
    double latency_jitter_ms = 0.0;
};

/* Relaxation bound 1 / (2 d sqrt(ks kp) + ks kp) with ks the condition
 * number of the step metric and kp of the activation probabilities. */
double theta_bound(const ProblemInstance& inst, const StepConfig& steps,
                   const ActivationModel& activation, int delay_bound);

struct SimConfig {
    std::uint64_t seed = 0;
    ActivationModel activation;
    DelayModel delay;
    TimingModel timing;
    double theta = -1.0;  // < 0: auto, 0.95 * theta_bound
    bool log_events = true;
};

struct SimEvent {
    std::int64_t tick = 0;
    int agent = 0;
    std::vector<int> primal_staleness;  // per neighbor, read ages in ticks
    std::vector<int> dual_staleness;
    std::int64_t messages_sent = 0;
};

/* Tick-stamped history of one variable: record r holds the value valid on
 * ticks [r.from, next.from).  Entries older than the retention window are
 * pruned, keeping the newest record at or below the horizon so every
 * admissible read stays resolvable. */
class HistoryBuffer {
public:
    void init(Vec value);                       // valid from tick 0
    void push(std::int64_t from, Vec value);    // strictly increasing `from`
    const Vec& read_as_of(std::int64_t t) const;
    const Vec& latest() const { return records_.back().value; }
    void prune(std::int64_t oldest_needed);

private:
    struct Record {
        std::int64_t from = 0;
        Vec value;
    };
    std::deque<Record> records_;
};

/* Single-logical-writer event loop over a virtual global clock: one agent
 * fires per tick, reads (possibly stale) peer values from its buffers,
 * applies the relaxed update, and mails its new boundary values to its
 * traders.  Payloads are value snapshots; nothing is shared mutably.
 * Replaying with the same seed reproduces the trajectory bit-identically. */
class SimWorld {
public:
    SimWorld(const ProblemInstance& inst, const StepConfig& steps, SimConfig config,
             SolverState init);

    const ProblemInstance& instance() const { return *inst_; }
    const StepConfig& steps() const { return steps_; }
    const SolverState& state() const { return state_; }
    std::int64_t tick() const { return state_.iter; }
    double theta() const { return theta_; }
    std::int64_t messages_delivered() const { return messages_; }
    double sim_time_ms() const { return sim_time_ms_; }
    const std::vector<SimEvent>& event_log() const { return events_; }

    /* Advance the virtual clock by one activation. */
    void step();

private:
    friend SolverState asyn_step(SimWorld&);

    struct AgentBuffers {
        HistoryBuffer own_primal;                 // full p_i
        std::vector<HistoryBuffer> peer_facing;   // per neighbor: Omega_{ji} p_j
        std::vector<HistoryBuffer> own_dual;      // per neighbor: w_(i,j),i
        std::vector<HistoryBuffer> peer_dual;     // per neighbor: w_(i,j),j
    };

    int sample_staleness(Rng& rng) const;
    std::int64_t sweep_start() const;
    void update_agent(int agent);

    const ProblemInstance* inst_;
    StepConfig steps_;
    SimConfig config_;
    SolverState state_;
    std::vector<AgentBuffers> buffers_;
    std::vector<double> agent_busy_ms_;  // per-agent accumulated compute time
    Rng rng_dynamics_;
    Rng rng_timing_;
    double theta_ = 1.0;
    std::int64_t messages_ = 0;
    double sim_time_ms_ = 0.0;
    std::vector<SimEvent> events_;
};

/* One tick; returns the post-tick state (all non-activated agents hold). */
SolverState asyn_step(SimWorld& world);

struct AsyncStopRule {
    double tol = 1e-8;
    std::int64_t max_ticks = 1000000;
};

struct AsyncRunOptions {
    std::optional<std::vector<double>> u_star;
};

struct AsyncRunResult {
    SolverState state;
    ConvergenceReport report;
    bool converged = false;
    std::int64_t ticks = 0;
};

/* Loops asyn_step until max(coupling, stationarity) <= tol on the global
 * state (an observer-only computation) or max_ticks. */
AsyncRunResult run_asyn(SimWorld& world, const AsyncStopRule& stop,
                        const AsyncRunOptions& options = {});

/* Deterministic round-robin schedule under which one sweep of m ticks
 * reproduces one synchronous round exactly: theta = 1, snapshot reads,
 * requires delay bound >= m - 1. */
SimConfig sweep_schedule(const ProblemInstance& inst, int delay_bound);

}  // namespace p2pem

#endif
