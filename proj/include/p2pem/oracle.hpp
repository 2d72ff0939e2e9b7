#ifndef P2PEM_ORACLE_HPP
#define P2PEM_ORACLE_HPP

#include <array>
#include <string>
#include <vector>

#include "p2pem/problem.hpp"
#include "p2pem/projection.hpp"
#include "p2pem/state.hpp"

namespace p2pem {

/* Reference solution computed independently of the operator-splitting
 * iterations, for tests and distance-to-optimum metrics. */
struct OracleSolution {
    std::vector<Vec> p_star;
    std::vector<std::array<Vec, 2>> w_star;  // both halves equal at optimality
    double objective = 0.0;                  // excludes constant offsets
    KktResidual residual;

    std::vector<double> packed(const ProblemInstance& inst) const;
};

/* Projected gradient with step 1/L_f; the feasible set (per-prosumer sets
 * intersected with the edge couplings) is handled by Dykstra-corrected
 * alternating projections.  The dual certificate is recovered from the
 * stationarity conditions restricted to the active faces (minimum-norm
 * solution when degenerate).  Throws std::runtime_error when the Dykstra
 * gap does not vanish (infeasible instance). */
OracleSolution solve_reference(const ProblemInstance& inst, double tol = 1e-12,
                               std::int64_t max_iter = 200000);

/* Exhaustive search over the coupling-reduced coordinates (one free value
 * per edge-period), two refinement passes, final grid step <= 1e-3.  Only
 * for instances with primal dimension <= 6. */
std::vector<Vec> brute_force_primal(const ProblemInstance& inst);

/* Projection of an arbitrary point onto the full feasible set
 * (prosumers' sets and edge couplings jointly), via Dykstra. */
std::vector<Vec> project_intersection(const ProblemInstance& inst,
                                      const std::vector<Vec>& p0, double tol = 1e-13,
                                      int max_rounds = 20000);

/* Cache beside scenario files. */
void save_oracle(const OracleSolution& sol, const std::string& path);
OracleSolution load_oracle(const ProblemInstance& inst, const std::string& path);

}  // namespace p2pem

#endif
