#include "p2pem/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace p2pem {

int TradingNetwork::neighbor_slot(int i, int j) const {
    const auto& nb = neighbors[i];
    auto it = std::lower_bound(nb.begin(), nb.end(), j);
    if (it == nb.end() || *it != j) return -1;
    return static_cast<int>(it - nb.begin());
}

bool TradingNetwork::connected() const {
    if (prosumer_count <= 0) return false;
    if (prosumer_count == 1) return true;
    std::vector<char> seen(prosumer_count, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int u : neighbors[v]) {
            if (!seen[u]) {
                seen[u] = 1;
                ++reached;
                stack.push_back(u);
            }
        }
    }
    return reached == prosumer_count;
}

TradingNetwork TradingNetwork::from_edges(int prosumer_count,
                                          std::vector<std::pair<int, int>> edges) {
    TradingNetwork net;
    net.prosumer_count = prosumer_count;
    for (auto& [i, j] : edges) {
        if (i == j) throw std::invalid_argument("network: self-loop at prosumer " + std::to_string(i));
        if (i < 0 || j < 0 || i >= prosumer_count || j >= prosumer_count)
            throw std::invalid_argument("network: edge endpoint out of range");
        if (i > j) std::swap(i, j);
    }
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
        throw std::invalid_argument("network: duplicate edge definition");
    net.edges = std::move(edges);
    net.neighbors.assign(prosumer_count, {});
    for (auto [i, j] : net.edges) {
        net.neighbors[i].push_back(j);
        net.neighbors[j].push_back(i);
    }
    for (auto& nb : net.neighbors) std::sort(nb.begin(), nb.end());
    return net;
}

int ProblemInstance::primal_dim() const {
    int n = 0;
    for (int i = 0; i < prosumer_count(); ++i) n += local_dim(i);
    return n;
}

int ProblemInstance::edge_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    auto it = std::lower_bound(network.edges.begin(), network.edges.end(), std::make_pair(i, j));
    if (it == network.edges.end() || *it != std::make_pair(i, j)) return -1;
    return static_cast<int>(it - network.edges.begin());
}

int ProblemInstance::edge_side(int e, int i) const {
    return network.edges[e].first == i ? 0 : 1;
}

double ProblemInstance::total_cost_offset() const {
    double total = 0.0;
    for (const auto& ci : costs.c) total += std::accumulate(ci.begin(), ci.end(), 0.0);
    return total;
}

Vec omega_gather(const ProblemInstance& inst, int i, int j, std::span<const double> p_i) {
    const int slot = inst.network.neighbor_slot(i, j);
    const int deg = inst.network.degree(i);
    Vec out(inst.horizon);
    for (int t = 0; t < inst.horizon; ++t) out[t] = p_i[t * deg + slot];
    return out;
}

void omega_scatter_add(const ProblemInstance& inst, int i, int j,
                       std::span<const double> v, std::span<double> out) {
    const int slot = inst.network.neighbor_slot(i, j);
    const int deg = inst.network.degree(i);
    for (int t = 0; t < inst.horizon; ++t) out[t * deg + slot] += v[t];
}

Vec xi_sums(const ProblemInstance& inst, int i, std::span<const double> p_i) {
    const int deg = inst.network.degree(i);
    Vec out(inst.horizon, 0.0);
    for (int t = 0; t < inst.horizon; ++t)
        for (int s = 0; s < deg; ++s) out[t] += p_i[t * deg + s];
    return out;
}

Vec psi_pair(const ProblemInstance& inst, int e,
             std::span<const double> p_i, std::span<const double> p_j) {
    auto [i, j] = inst.network.edges[e];
    Vec qi = omega_gather(inst, i, j, p_i);
    Vec qj = omega_gather(inst, j, i, p_j);
    Vec out(2 * inst.horizon);
    std::copy(qi.begin(), qi.end(), out.begin());
    std::copy(qj.begin(), qj.end(), out.begin() + inst.horizon);
    return out;
}

namespace {

void check_layout(const TradingNetwork& net, int horizon, const std::vector<Vec>& field,
                  const char* name, std::vector<std::string>& out) {
    if (static_cast<int>(field.size()) != net.prosumer_count) {
        out.push_back(std::string("costs: ") + name + " must have one block per prosumer");
        return;
    }
    for (int i = 0; i < net.prosumer_count; ++i) {
        if (static_cast<int>(field[i].size()) != horizon * net.degree(i))
            out.push_back(std::string("costs: ") + name + " block of prosumer " +
                          std::to_string(i + 1) + " has wrong dimension");
    }
}

}  // namespace

std::vector<std::string> validate_components(const TradingNetwork& network, int horizon,
                                             const RoleSchedule& roles, const CostProfile& costs,
                                             const ConstraintProfile& constraints) {
    std::vector<std::string> out;
    const int m = network.prosumer_count;
    if (m < 1) out.push_back("network: prosumer count must be positive");
    if (horizon < 1) out.push_back("horizon must be positive");
    if (!out.empty()) return out;

    if (!network.connected())
        out.push_back("network: graph is not connected");
    for (int i = 0; i < m; ++i)
        for (int j : network.neighbors[i])
            if (network.neighbor_slot(j, i) < 0)
                out.push_back("network: asymmetric edge definition between " +
                              std::to_string(i + 1) + " and " + std::to_string(j + 1));

    if (static_cast<int>(roles.roles.size()) != horizon) {
        out.push_back("roles: need one seller/buyer partition per period");
        return out;
    }
    for (int t = 0; t < horizon; ++t)
        if (static_cast<int>(roles.roles[t].size()) != m)
            out.push_back("roles: partition at period " + std::to_string(t + 1) +
                          " does not cover every prosumer");

    check_layout(network, horizon, costs.a, "a", out);
    check_layout(network, horizon, costs.b_trade, "b_trade", out);
    check_layout(network, horizon, costs.b_fee, "b_fee", out);
    check_layout(network, horizon, costs.b_rep, "b_rep", out);
    check_layout(network, horizon, costs.c, "c", out);
    if (!out.empty()) return out;

    for (int i = 0; i < m; ++i) {
        const int deg = network.degree(i);
        for (int t = 0; t < horizon; ++t) {
            for (int s = 0; s < deg; ++s) {
                const int c = t * deg + s;
                if (!(costs.a[i][c] > 0.0))
                    out.push_back("costs: a must be strictly positive (prosumer " +
                                  std::to_string(i + 1) + ", trader " +
                                  std::to_string(network.neighbors[i][s] + 1) + ", period " +
                                  std::to_string(t + 1) + ")");
                if (costs.b_fee[i][c] < 0.0)
                    out.push_back("costs: b_fee must be nonnegative (prosumer " +
                                  std::to_string(i + 1) + ", period " + std::to_string(t + 1) + ")");
                if (costs.b_rep[i][c] < 0.0)
                    out.push_back("costs: b_rep must be nonnegative (prosumer " +
                                  std::to_string(i + 1) + ", period " + std::to_string(t + 1) + ")");
            }
        }
    }

    if (static_cast<int>(constraints.sum_min.size()) != m ||
        static_cast<int>(constraints.sum_max.size()) != m) {
        out.push_back("bounds: need one min/max series per prosumer");
        return out;
    }
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(constraints.sum_min[i].size()) != horizon ||
            static_cast<int>(constraints.sum_max[i].size()) != horizon) {
            out.push_back("bounds: series of prosumer " + std::to_string(i + 1) +
                          " must have length " + std::to_string(horizon));
            continue;
        }
        for (int t = 0; t < horizon; ++t) {
            const double lo = constraints.sum_min[i][t];
            const double hi = constraints.sum_max[i][t];
            if (lo > hi)
                out.push_back("bounds: min > max for prosumer " + std::to_string(i + 1) +
                              " at period " + std::to_string(t + 1));
            // role orthant must intersect the set-point interval
            if (network.degree(i) > 0) {
                const Role r = roles.roles[t][i];
                if (r == Role::seller && hi < 0.0)
                    out.push_back("bounds: seller set empty (max < 0) for prosumer " +
                                  std::to_string(i + 1) + " at period " + std::to_string(t + 1));
                if (r == Role::buyer && lo > 0.0)
                    out.push_back("bounds: buyer set empty (min > 0) for prosumer " +
                                  std::to_string(i + 1) + " at period " + std::to_string(t + 1));
            }
        }
    }

    if (static_cast<int>(constraints.loss.size()) != static_cast<int>(network.edges.size())) {
        out.push_back("loss: need one series per edge");
        return out;
    }
    for (std::size_t e = 0; e < network.edges.size(); ++e) {
        if (static_cast<int>(constraints.loss[e].size()) != horizon) {
            out.push_back("loss: series of edge " + std::to_string(e) + " must have length " +
                          std::to_string(horizon));
            continue;
        }
        for (int t = 0; t < horizon; ++t)
            if (constraints.loss[e][t] < 0.0)
                out.push_back("loss: must be nonnegative (edge " + std::to_string(e) +
                              ", period " + std::to_string(t + 1) + ")");
    }
    return out;
}

ProblemInstance build_instance(TradingNetwork network, int horizon, RoleSchedule roles,
                               CostProfile costs, ConstraintProfile constraints) {
    auto problems = validate_components(network, horizon, roles, costs, constraints);
    if (!problems.empty()) throw std::invalid_argument(problems.front());

    ProblemInstance inst;
    inst.network = std::move(network);
    inst.horizon = horizon;
    inst.roles = std::move(roles);
    inst.costs = std::move(costs);
    inst.constraints = std::move(constraints);

    inst.lin_b.resize(inst.prosumer_count());
    for (int i = 0; i < inst.prosumer_count(); ++i) {
        const auto n = inst.costs.a[i].size();
        inst.lin_b[i].resize(n);
        for (std::size_t c = 0; c < n; ++c)
            inst.lin_b[i][c] =
                inst.costs.b_trade[i][c] + inst.costs.b_fee[i][c] - inst.costs.b_rep[i][c];
    }
    return inst;
}

double cost_value(const ProblemInstance& inst, int i, std::span<const double> p_i) {
    if (static_cast<int>(p_i.size()) != inst.local_dim(i))
        throw std::invalid_argument("cost_value: dimension mismatch");
    double v = 0.0;
    for (std::size_t c = 0; c < p_i.size(); ++c)
        v += inst.costs.a[i][c] * p_i[c] * p_i[c] + inst.lin_b[i][c] * p_i[c];
    return v;
}

Vec cost_gradient(const ProblemInstance& inst, int i, std::span<const double> p_i) {
    if (static_cast<int>(p_i.size()) != inst.local_dim(i))
        throw std::invalid_argument("cost_gradient: dimension mismatch");
    Vec g(p_i.size());
    for (std::size_t c = 0; c < p_i.size(); ++c)
        g[c] = 2.0 * inst.costs.a[i][c] * p_i[c] + inst.lin_b[i][c];
    return g;
}

SmoothnessConstants smoothness_constants(const ProblemInstance& inst) {
    double a_min = std::numeric_limits<double>::infinity();
    double a_max = 0.0;
    bool any = false;
    for (const auto& block : inst.costs.a) {
        for (double a : block) {
            a_min = std::min(a_min, a);
            a_max = std::max(a_max, a);
            any = true;
        }
    }
    SmoothnessConstants sc;
    if (!any) return sc;  // edgeless network: f vanishes
    sc.lipschitz = 2.0 * a_max;
    sc.strong_convexity = 2.0 * a_min;
    sc.condition_number = a_max / a_min;
    return sc;
}

}  // namespace p2pem
