#include "p2pem/state.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace p2pem {

bool SolverState::finite() const {
    for (const auto& pi : p)
        for (double v : pi)
            if (!std::isfinite(v)) return false;
    for (const auto& we : w)
        for (const auto& half : we)
            for (double v : half)
                if (!std::isfinite(v)) return false;
    return true;
}

SolverState zero_state(const ProblemInstance& inst) {
    SolverState s;
    s.p.resize(inst.prosumer_count());
    for (int i = 0; i < inst.prosumer_count(); ++i) s.p[i].assign(inst.local_dim(i), 0.0);
    s.w.resize(inst.edge_count());
    for (auto& we : s.w) {
        we[0].assign(inst.horizon, 0.0);
        we[1].assign(inst.horizon, 0.0);
    }
    return s;
}

int packed_dim(const ProblemInstance& inst) { return inst.dual_dim() + inst.primal_dim(); }

std::vector<double> pack_state(const ProblemInstance& inst, const SolverState& s) {
    std::vector<double> u;
    u.reserve(packed_dim(inst));
    for (const auto& we : s.w) {
        u.insert(u.end(), we[0].begin(), we[0].end());
        u.insert(u.end(), we[1].begin(), we[1].end());
    }
    for (const auto& pi : s.p) u.insert(u.end(), pi.begin(), pi.end());
    return u;
}

void unpack_state(const ProblemInstance& inst, std::span<const double> u, SolverState& s) {
    if (static_cast<int>(u.size()) != packed_dim(inst))
        throw std::invalid_argument("unpack_state: dimension mismatch");
    std::size_t pos = 0;
    s.w.resize(inst.edge_count());
    for (auto& we : s.w) {
        for (auto& half : we) {
            half.assign(u.begin() + pos, u.begin() + pos + inst.horizon);
            pos += inst.horizon;
        }
    }
    s.p.resize(inst.prosumer_count());
    for (int i = 0; i < inst.prosumer_count(); ++i) {
        const int n = inst.local_dim(i);
        s.p[i].assign(u.begin() + pos, u.begin() + pos + n);
        pos += n;
    }
}

double alpha_bound(const ProblemInstance& inst, const StepConfig& partial, int i,
                   StepRegime regime) {
    const auto sc = smoothness_constants(inst);
    // || sum_j beta Omega'Omega || is diagonal: the largest beta among i's edges
    double beta_max = 0.0;
    for (int j : inst.network.neighbors[i])
        beta_max = std::max(beta_max, partial.beta[inst.edge_index(i, j)]);
    const double curvature = regime == StepRegime::synchronous
                                 ? 0.5 * sc.lipschitz
                                 : 0.5 * sc.condition_number * sc.lipschitz;
    return 1.0 / (curvature + beta_max);
}

StepConfig default_steps(const ProblemInstance& inst, double sigma, StepRegime regime,
                         double beta_scale) {
    if (!(sigma > 0.0) || sigma > 1.0)
        throw std::invalid_argument("default_steps: sigma must lie in (0, 1]");
    if (!(beta_scale > 0.0)) throw std::invalid_argument("default_steps: beta must be positive");
    StepConfig cfg;
    cfg.beta.assign(inst.edge_count(), beta_scale);
    cfg.alpha.resize(inst.prosumer_count());
    for (int i = 0; i < inst.prosumer_count(); ++i)
        cfg.alpha[i] = sigma * alpha_bound(inst, cfg, i, regime);
    return cfg;
}

}  // namespace p2pem
