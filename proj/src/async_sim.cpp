#include "p2pem/async_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace p2pem {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

ActivationModel ActivationModel::uniform(int m) {
    ActivationModel a;
    a.rates.assign(m, 1.0);
    a.probabilities.assign(m, 1.0 / m);
    return a;
}

ActivationModel ActivationModel::from_rates(Vec rates) {
    if (rates.empty()) throw std::invalid_argument("activation: empty rate list");
    double total = 0.0;
    for (double r : rates) {
        if (!(r > 0.0)) throw std::invalid_argument("activation: rates must be positive");
        total += r;
    }
    ActivationModel a;
    a.probabilities.resize(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i) a.probabilities[i] = rates[i] / total;
    a.rates = std::move(rates);
    return a;
}

double ActivationModel::p_min() const {
    return *std::min_element(probabilities.begin(), probabilities.end());
}

double ActivationModel::p_max() const {
    return *std::max_element(probabilities.begin(), probabilities.end());
}

int ActivationModel::sample(Rng& rng) const {
    const double u = rng.next_double();
    double acc = 0.0;
    const int m = static_cast<int>(probabilities.size());
    for (int i = 0; i < m; ++i) {
        acc += probabilities[i];
        if (u < acc) return i;
    }
    return m - 1;
}

double theta_bound(const ProblemInstance& inst, const StepConfig& steps,
                   const ActivationModel& activation, int delay_bound) {
    return relaxation_bound(ts_weights(inst, steps).condition_number(),
                            activation.condition_number(), delay_bound);
}

void HistoryBuffer::init(Vec value) {
    records_.clear();
    records_.push_back({0, std::move(value)});
}

void HistoryBuffer::push(std::int64_t from, Vec value) {
    records_.push_back({from, std::move(value)});
}

const Vec& HistoryBuffer::read_as_of(std::int64_t t) const {
    // reads cluster near the newest records
    for (auto it = records_.rbegin(); it != records_.rend(); ++it)
        if (it->from <= t) return it->value;
    throw std::logic_error("history buffer: read before first record");
}

void HistoryBuffer::prune(std::int64_t oldest_needed) {
    while (records_.size() > 1 && records_[1].from <= oldest_needed) records_.pop_front();
}

SimWorld::SimWorld(const ProblemInstance& inst, const StepConfig& steps, SimConfig config,
                   SolverState init)
    : inst_(&inst),
      steps_(steps),
      config_(std::move(config)),
      state_(std::move(init)),
      rng_dynamics_(derive_seed(config_.seed, 0)),
      rng_timing_(derive_seed(config_.seed, 1)) {
    const int m = inst.prosumer_count();
    if (config_.activation.probabilities.empty()) config_.activation = ActivationModel::uniform(m);
    if (static_cast<int>(config_.activation.probabilities.size()) != m)
        throw std::invalid_argument("sim: activation model size mismatch");
    if (config_.delay.bound < 0) throw std::invalid_argument("sim: delay bound must be >= 0");
    if (config_.delay.mode == DelayModel::Mode::sweep_snapshot && config_.delay.bound < m - 1)
        throw std::invalid_argument("sim: sweep schedule needs delay bound >= m - 1");

    theta_ = config_.theta >= 0.0
                 ? config_.theta
                 : 0.95 * theta_bound(inst, steps_, config_.activation, config_.delay.bound);

    state_.iter = 0;
    agent_busy_ms_.assign(m, 0.0);
    buffers_.resize(m);
    for (int i = 0; i < m; ++i) {
        auto& b = buffers_[i];
        b.own_primal.init(state_.p[i]);
        const auto& nb = inst.network.neighbors[i];
        b.peer_facing.resize(nb.size());
        b.own_dual.resize(nb.size());
        b.peer_dual.resize(nb.size());
        for (std::size_t s = 0; s < nb.size(); ++s) {
            const int j = nb[s];
            const int e = inst.edge_index(i, j);
            b.peer_facing[s].init(omega_gather(inst, j, i, state_.p[j]));
            b.own_dual[s].init(state_.w[e][inst.edge_side(e, i)]);
            b.peer_dual[s].init(state_.w[e][inst.edge_side(e, j)]);
        }
    }
}

int SimWorld::sample_staleness(Rng& rng) const {
    switch (config_.delay.mode) {
        case DelayModel::Mode::fixed:
            return config_.delay.bound;
        case DelayModel::Mode::uniform_random:
            return rng.next_int(config_.delay.bound + 1);
        case DelayModel::Mode::sweep_snapshot:
            break;  // handled by sweep_start()
    }
    return 0;
}

std::int64_t SimWorld::sweep_start() const {
    const int m = inst_->prosumer_count();
    return (state_.iter / m) * m;
}

void SimWorld::update_agent(int agent) {
    const auto& inst = *inst_;
    const std::int64_t k = state_.iter;
    const bool sweep = config_.delay.mode == DelayModel::Mode::sweep_snapshot;
    const std::int64_t snapshot = sweep ? sweep_start() : k;
    auto& buf = buffers_[agent];
    const auto& nb = inst.network.neighbors[agent];
    const int deg = static_cast<int>(nb.size());

    SimEvent ev;
    ev.tick = k;
    ev.agent = agent;
    ev.primal_staleness.resize(deg);
    ev.dual_staleness.resize(deg);

    // own-variable reads are fresh except under the sweep snapshot
    const Vec& p_read = buf.own_primal.read_as_of(snapshot);

    // per-trader stale reads and intermediate prices
    std::vector<Vec> wbar(deg);
    std::vector<const Vec*> w_self_read(deg);
    for (int s = 0; s < deg; ++s) {
        const int j = nb[s];
        const int e = inst.edge_index(agent, j);
        std::int64_t p_as_of = snapshot, w_as_of = snapshot;
        if (!sweep) {
            p_as_of = std::max<std::int64_t>(0, k - sample_staleness(rng_dynamics_));
            w_as_of = std::max<std::int64_t>(0, k - sample_staleness(rng_dynamics_));
        }
        ev.primal_staleness[s] = static_cast<int>(k - p_as_of);
        ev.dual_staleness[s] = static_cast<int>(k - w_as_of);
        if (k - p_as_of > config_.delay.bound || k - w_as_of > config_.delay.bound)
            throw std::logic_error("sim: staleness exceeded the delay bound");

        const Vec& q_peer = buf.peer_facing[s].read_as_of(p_as_of);
        const Vec& w_peer = buf.peer_dual[s].read_as_of(w_as_of);
        w_self_read[s] = &buf.own_dual[s].read_as_of(snapshot);
        Vec q_self = omega_gather(inst, agent, j, p_read);
        wbar[s] = edge_prox(steps_.beta[e], *w_self_read[s], w_peer, q_self, q_peer,
                            inst.constraints.loss[e]);
    }

    // projected gradient step on the (possibly stale) own primal
    Vec g = cost_gradient(inst, agent, p_read);
    for (int s = 0; s < deg; ++s) omega_scatter_add(inst, agent, nb[s], wbar[s], g);
    Vec shifted(g.size());
    for (std::size_t c = 0; c < g.size(); ++c)
        shifted[c] = p_read[c] - steps_.alpha[agent] * g[c];
    const Vec pbar = project_prosumer(inst, agent, shifted);

    // relaxed writes; every other agent holds its variables
    Vec p_new = state_.p[agent];
    for (std::size_t c = 0; c < p_new.size(); ++c)
        p_new[c] += theta_ * (pbar[c] - p_read[c]);

    for (int s = 0; s < deg; ++s) {
        const int j = nb[s];
        const int e = inst.edge_index(agent, j);
        const int side = inst.edge_side(e, agent);
        Vec w_new = state_.w[e][side];
        const int slot_j = inst.network.neighbor_slot(agent, j);
        const int deg_a = inst.network.degree(agent);
        for (int t = 0; t < inst.horizon; ++t) {
            const int c = t * deg_a + slot_j;
            w_new[t] += theta_ * (wbar[s][t] - (*w_self_read[s])[t]) +
                        theta_ * steps_.beta[e] * (pbar[c] - p_read[c]);
        }
        state_.w[e][side] = std::move(w_new);
    }
    state_.p[agent] = std::move(p_new);

    // publish the new values (valid from k+1) to own and traders' buffers
    buf.own_primal.push(k + 1, state_.p[agent]);
    double compute = config_.timing.compute_ms.empty() ? 1.0 : config_.timing.compute_ms[agent];
    if (config_.timing.compute_jitter_ms > 0.0)
        compute += rng_timing_.uniform(-config_.timing.compute_jitter_ms,
                                       config_.timing.compute_jitter_ms);
    agent_busy_ms_[agent] += std::max(0.0, compute);
    const double completion = agent_busy_ms_[agent];
    for (int s = 0; s < deg; ++s) {
        const int j = nb[s];
        const int e = inst.edge_index(agent, j);
        const int side = inst.edge_side(e, agent);
        const int slot_back = inst.network.neighbor_slot(j, agent);
        buffers_[j].peer_facing[slot_back].push(k + 1,
                                                omega_gather(inst, agent, j, state_.p[agent]));
        buffers_[j].peer_dual[slot_back].push(k + 1, state_.w[e][side]);
        buf.own_dual[s].push(k + 1, state_.w[e][side]);
        ++messages_;
        double lat = config_.timing.latency_ms;
        if (config_.timing.latency_jitter_ms > 0.0)
            lat += rng_timing_.uniform(-config_.timing.latency_jitter_ms,
                                       config_.timing.latency_jitter_ms);
        sim_time_ms_ = std::max(sim_time_ms_, completion + std::max(0.0, lat));
    }
    sim_time_ms_ = std::max(sim_time_ms_, completion);
    ev.messages_sent = deg;
    if (config_.log_events) events_.push_back(std::move(ev));

    // retention window: future reads never look further back than d
    const std::int64_t oldest = k + 1 - config_.delay.bound;
    buf.own_primal.prune(oldest);
    for (int s = 0; s < deg; ++s) {
        buf.own_dual[s].prune(oldest);
        buf.peer_dual[s].prune(oldest);
        buf.peer_facing[s].prune(oldest);
    }
}

void SimWorld::step() {
    const int m = inst_->prosumer_count();
    int agent;
    if (config_.delay.mode == DelayModel::Mode::sweep_snapshot)
        agent = static_cast<int>(state_.iter % m);
    else
        agent = config_.activation.sample(rng_dynamics_);
    update_agent(agent);
    ++state_.iter;
}

SolverState asyn_step(SimWorld& world) {
    world.step();
    return world.state();
}

AsyncRunResult run_asyn(SimWorld& world, const AsyncStopRule& stop,
                        const AsyncRunOptions& options) {
    if (!(stop.tol > 0.0)) throw std::invalid_argument("run_asyn: tol must be positive");
    const auto& inst = world.instance();
    const auto weights = ts_weights(inst, world.steps());

    AsyncRunResult result;
    std::vector<double> prev_u;
    while (true) {
        const auto& s = world.state();
        if (!s.finite())
            throw DivergenceError("run_asyn: non-finite state at tick " + std::to_string(s.iter));
        const auto u = pack_state(inst, s);
        const auto kkt = kkt_residual(inst, s.p, s.w);

        ReportRecord rec;
        rec.k = s.iter;
        rec.coupling = kkt.coupling;
        rec.stationarity = kkt.stationarity;
        rec.dist_ts = options.u_star ? weights.dist(u, *options.u_star) : kNan;
        rec.fejer_slack = (options.u_star && !prev_u.empty())
                              ? fejer_slack(weights, u, prev_u, *options.u_star)
                              : kNan;
        rec.messages = world.messages_delivered();
        rec.sim_time_ms = world.sim_time_ms();
        result.report.records.push_back(rec);

        if (std::max(kkt.coupling, kkt.stationarity) <= stop.tol) {
            result.converged = true;
            break;
        }
        if (s.iter >= stop.max_ticks) break;

        prev_u = u;
        world.step();
    }
    result.state = world.state();
    result.ticks = world.tick();
    return result;
}

SimConfig sweep_schedule(const ProblemInstance& inst, int delay_bound) {
    if (delay_bound < inst.prosumer_count() - 1)
        throw std::invalid_argument("sweep_schedule: needs delay bound >= m - 1");
    SimConfig cfg;
    cfg.activation = ActivationModel::uniform(inst.prosumer_count());
    cfg.delay = DelayModel{DelayModel::Mode::sweep_snapshot, delay_bound};
    cfg.theta = 1.0;
    return cfg;
}

}  // namespace p2pem
