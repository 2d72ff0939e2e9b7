#ifndef P2PEM_STATE_HPP
#define P2PEM_STATE_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "p2pem/problem.hpp"

namespace p2pem {

/* Iterate of the solvers: per-prosumer primal blocks and, per edge, both
 * directed halves of the price signal (side 0 belongs to the lower-id
 * endpoint).  Dimensions are fixed by the instance and never change. */
struct SolverState {
    std::int64_t iter = 0;
    std::vector<Vec> p;                  // [i][T * |N_i|]
    std::vector<std::array<Vec, 2>> w;   // [edge][side][T]

    bool finite() const;
};

SolverState zero_state(const ProblemInstance& inst);

/* Stacked vector U = [w; x] used by the weighted-norm diagnostics.
 * Edge blocks come first in canonical edge order (side 0 then side 1),
 * then the primal blocks in prosumer order. */
std::vector<double> pack_state(const ProblemInstance& inst, const SolverState& s);
void unpack_state(const ProblemInstance& inst, std::span<const double> u, SolverState& s);
int packed_dim(const ProblemInstance& inst);

/* Uncoordinated step sizes: one primal step per prosumer, one dual step
 * per edge.  Plain data; validity against the step-size bounds is checked
 * by the bound calculators, not enforced here. */
struct StepConfig {
    Vec alpha;  // [i]
    Vec beta;   // [edge]
};

enum class StepRegime { synchronous, asynchronous };

/* Largest admissible primal step for prosumer i (before the safety
 * factor): 1 / (L_f/2 + max_j beta) in the synchronous regime and
 * 1 / (kappa_f L_f/2 + max_j beta) in the asynchronous one. */
double alpha_bound(const ProblemInstance& inst, const StepConfig& partial, int i,
                   StepRegime regime);

/* beta = 1 uniformly (unless beta_scale given), alpha_i = sigma times the
 * regime bound; sigma must lie in (0, 1). */
StepConfig default_steps(const ProblemInstance& inst, double sigma,
                         StepRegime regime = StepRegime::synchronous,
                         double beta_scale = 1.0);

}  // namespace p2pem

#endif
