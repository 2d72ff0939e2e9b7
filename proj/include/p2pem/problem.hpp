#ifndef P2PEM_PROBLEM_HPP
#define P2PEM_PROBLEM_HPP

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace p2pem {

using Vec = std::vector<double>;

enum class Role { seller, buyer };

/* Undirected trading graph. Neighbor lists are kept sorted ascending;
 * their order defines the coordinate layout of each local variable. */
struct TradingNetwork {
    int prosumer_count = 0;
    std::vector<std::pair<int, int>> edges;     // canonical: i < j, sorted
    std::vector<std::vector<int>> neighbors;    // [i] -> sorted trader ids

    int degree(int i) const { return static_cast<int>(neighbors[i].size()); }
    // position of j in N_i, or -1
    int neighbor_slot(int i, int j) const;
    bool connected() const;

    static TradingNetwork from_edges(int prosumer_count,
                                     std::vector<std::pair<int, int>> edges);
};

/* Seller/buyer partition per period. */
struct RoleSchedule {
    // roles[t][i] for t in [0,T), i in [0,m)
    std::vector<std::vector<Role>> roles;

    Role at(int t, int i) const { return roles[t][i]; }
};

/* Bilateral per-(i, j, t) cost coefficients, stored in the coordinate
 * layout of p_i: index (t * |N_i| + slot(j)). */
struct CostProfile {
    std::vector<Vec> a;        // quadratic, > 0
    std::vector<Vec> b_trade;  // linear trading term
    std::vector<Vec> b_fee;    // network utilization fee, >= 0
    std::vector<Vec> b_rep;    // reputation income, >= 0
    std::vector<Vec> c;        // constant offset, reporting only
};

struct ConstraintProfile {
    std::vector<Vec> sum_min;  // [i][t] set-point lower bound
    std::vector<Vec> sum_max;  // [i][t] set-point upper bound
    std::vector<Vec> loss;     // [edge][t], symmetric per unordered pair, >= 0
};

/* Immutable after construction; safe to share read-only across threads.
 *
 * Coordinate layout of p_i is time-major: coordinate of (j, t) is
 * t * |N_i| + slot(j) with slot(j) the position of j in the sorted
 * neighbor list (t zero-based here).  All serialization fixes this order.
 */
struct ProblemInstance {
    TradingNetwork network;
    int horizon = 0;
    RoleSchedule roles;
    CostProfile costs;
    ConstraintProfile constraints;

    // effective linear coefficient b = b_trade + b_fee - b_rep, per coordinate
    std::vector<Vec> lin_b;

    int prosumer_count() const { return network.prosumer_count; }
    int edge_count() const { return static_cast<int>(network.edges.size()); }
    int local_dim(int i) const { return horizon * network.degree(i); }
    int primal_dim() const;
    // dual vector dimension: both halves of every edge price, length T each
    int dual_dim() const { return 2 * horizon * edge_count(); }

    int coord(int i, int slot, int t) const { return t * network.degree(i) + slot; }
    Role role(int i, int t) const { return roles.at(t, i); }

    // edge index of the unordered pair, or -1
    int edge_index(int i, int j) const;
    // which endpoint of edge e prosumer i is: 0 (lower id) or 1
    int edge_side(int e, int i) const;

    double total_cost_offset() const;  // sum of all c coefficients
};

/* Selection maps, realized as gather/scatter on the layout above. */

// Omega_{ij} p_i: the T coordinates of p_i facing trader j
Vec omega_gather(const ProblemInstance& inst, int i, int j, std::span<const double> p_i);
// Omega_{ij}^T v: scatter-add a length-T vector into p_i coordinates facing j
void omega_scatter_add(const ProblemInstance& inst, int i, int j,
                       std::span<const double> v, std::span<double> out);
// Xi_i p_i: per-period sums over neighbors, length T
Vec xi_sums(const ProblemInstance& inst, int i, std::span<const double> p_i);
// Psi_{(i,j)} p: [Omega_{ij} p_i ; Omega_{ji} p_j], length 2T
Vec psi_pair(const ProblemInstance& inst, int e,
             std::span<const double> p_i, std::span<const double> p_j);

/* Construction and validation. build_instance throws std::invalid_argument
 * on the first violation; validate_components collects every diagnostic. */
ProblemInstance build_instance(TradingNetwork network, int horizon,
                               RoleSchedule roles, CostProfile costs,
                               ConstraintProfile constraints);
std::vector<std::string> validate_components(const TradingNetwork& network, int horizon,
                                             const RoleSchedule& roles, const CostProfile& costs,
                                             const ConstraintProfile& constraints);

/* Local objective p_i' A_i p_i + b_i' p_i (constant offsets excluded). */
double cost_value(const ProblemInstance& inst, int i, std::span<const double> p_i);

/* Gradient 2 A_i p_i + b_i. */
Vec cost_gradient(const ProblemInstance& inst, int i, std::span<const double> p_i);

/* Exact curvature constants of f(p) = sum_i p_i' A_i p_i + b_i' p_i:
 * the Hessian is blockdiag(2 A_i), so L_f = 2 max a, mu = 2 min a. */
struct SmoothnessConstants {
    double lipschitz = 0.0;   // L_f
    double strong_convexity = 0.0;  // mu
    double condition_number = 1.0;  // kappa_f = L_f / mu
};
SmoothnessConstants smoothness_constants(const ProblemInstance& inst);

}  // namespace p2pem

#endif
