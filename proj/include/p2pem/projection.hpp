#ifndef P2PEM_PROJECTION_HPP
#define P2PEM_PROJECTION_HPP

#include <array>
#include <span>
#include <utility>

#include "p2pem/problem.hpp"

namespace p2pem {

/* One period of a prosumer's feasible set: the role orthant intersected
 * with the set-point interval on the coordinate sum,
 *   { x : x >= 0 (seller) / x <= 0 (buyer),  lo <= 1'x <= hi }. */
struct TimeSliceSet {
    Role role = Role::seller;
    double lo = 0.0;
    double hi = 0.0;

    bool nonempty() const {
        if (lo > hi) return false;
        return role == Role::seller ? hi >= 0.0 : lo <= 0.0;
    }
};

TimeSliceSet feasible_slice(const ProblemInstance& inst, int i, int t);

/* Euclidean projection onto a TimeSliceSet.
 *
 * Clips to the role orthant first; if the clipped sum violates the
 * interval, solves the active sum constraint by bisection on the scalar
 * multiplier in x(lambda) = clip(v - lambda 1).  The sum residual is
 * driven to <= 1e-12 (at most 200 bisection steps). */
Vec project_feasible(const TimeSliceSet& set, std::span<const double> v);

/* Projection of a full local vector p_i onto S_i; factorizes over periods
 * because both the sum and the sign constraints are per-period. */
Vec project_prosumer(const ProblemInstance& inst, int i, std::span<const double> p_i);

/* Closed-form resolvent of the edge coupling term: both endpoints of an
 * edge obtain the same intermediate price
 *   (beta/2) (q_self + q_peer - loss) + (w_self + w_peer)/2,
 * elementwise over periods. */
Vec edge_prox(double beta, std::span<const double> w_self, std::span<const double> w_peer,
              std::span<const double> q_self, std::span<const double> q_peer,
              std::span<const double> loss);

/* First-order optimality residuals at (p, w).
 *
 * stationarity: sum over prosumers of || p_i - P_{S_i}(p_i - g_i) || with
 * g_i = 2 A_i p_i + b_i + sum_j Omega_{ij}' w_{(i,j),i} (natural map).
 * coupling: l2 norm over edges and periods of q_i + q_j - loss. */
struct KktResidual {
    double stationarity = 0.0;
    double coupling = 0.0;
};
KktResidual kkt_residual(const ProblemInstance& inst,
                         const std::vector<Vec>& p,
                         const std::vector<std::array<Vec, 2>>& w);

}  // namespace p2pem

#endif
