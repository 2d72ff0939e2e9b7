#include "p2pem/projection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace p2pem {

TimeSliceSet feasible_slice(const ProblemInstance& inst, int i, int t) {
    return TimeSliceSet{inst.role(i, t), inst.constraints.sum_min[i][t],
                        inst.constraints.sum_max[i][t]};
}

namespace {

constexpr double kSumTol = 1e-12;
constexpr int kMaxBisect = 200;

double clip(Role role, double x) {
    return role == Role::seller ? std::max(x, 0.0) : std::min(x, 0.0);
}

// sum of clip(v - lambda), decreasing in lambda
double shifted_sum(Role role, std::span<const double> v, double lambda) {
    double s = 0.0;
    for (double vi : v) s += clip(role, vi - lambda);
    return s;
}

}  // namespace

Vec project_feasible(const TimeSliceSet& set, std::span<const double> v) {
    if (!set.nonempty()) throw std::invalid_argument("project_feasible: empty feasible set");
    const int n = static_cast<int>(v.size());
    Vec x(n);
    double sum = 0.0;
    for (int c = 0; c < n; ++c) {
        x[c] = clip(set.role, v[c]);
        sum += x[c];
    }
    if (sum >= set.lo && sum <= set.hi) return x;
    if (n == 0) throw std::invalid_argument("project_feasible: empty feasible set");

    // The sum constraint is active; solve sum(clip(v - lambda)) = target.
    const double target = sum > set.hi ? set.hi : set.lo;
    double vmin = v[0], vmax = v[0];
    for (double vi : v) {
        vmin = std::min(vmin, vi);
        vmax = std::max(vmax, vi);
    }
    // brackets where the shifted sum straddles the target on both sides
    double lo, hi;
    if (set.role == Role::seller) {
        lo = vmin - std::abs(target) - 1.0;  // sum >= n(|target|+1) >= target
        hi = vmax;                           // sum = 0 <= target (target >= 0 for sellers)
    } else {
        lo = vmin;                           // sum = 0 >= target (target <= 0 for buyers)
        hi = vmax - target + 1.0;            // sum <= n(target-1) <= target
    }
    double flo = shifted_sum(set.role, v, lo);
    double fhi = shifted_sum(set.role, v, hi);
    if (!(flo >= target && fhi <= target))
        throw std::runtime_error("project_feasible: bisection bracket failed");

    double mid = lo;
    for (int it = 0; it < kMaxBisect; ++it) {
        mid = 0.5 * (lo + hi);
        const double f = shifted_sum(set.role, v, mid);
        if (std::abs(f - target) <= kSumTol) break;
        if (f > target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-18 * std::max(1.0, std::abs(mid))) break;
    }
    if (std::abs(shifted_sum(set.role, v, mid) - target) > 1e-9)
        throw std::runtime_error("project_feasible: bisection did not converge");
    for (int c = 0; c < n; ++c) x[c] = clip(set.role, v[c] - mid);
    return x;
}

Vec project_prosumer(const ProblemInstance& inst, int i, std::span<const double> p_i) {
    const int deg = inst.network.degree(i);
    Vec out(p_i.size());
    for (int t = 0; t < inst.horizon; ++t) {
        auto slice = feasible_slice(inst, i, t);
        Vec xt = project_feasible(slice, p_i.subspan(t * deg, deg));
        std::copy(xt.begin(), xt.end(), out.begin() + t * deg);
    }
    return out;
}

Vec edge_prox(double beta, std::span<const double> w_self, std::span<const double> w_peer,
              std::span<const double> q_self, std::span<const double> q_peer,
              std::span<const double> loss) {
    if (!(beta > 0.0)) throw std::invalid_argument("edge_prox: beta must be positive");
    const std::size_t n = w_self.size();
    if (w_peer.size() != n || q_self.size() != n || q_peer.size() != n || loss.size() != n)
        throw std::invalid_argument("edge_prox: dimension mismatch");
    Vec out(n);
    for (std::size_t t = 0; t < n; ++t)
        out[t] = 0.5 * beta * (q_self[t] + q_peer[t] - loss[t]) + 0.5 * (w_self[t] + w_peer[t]);
    return out;
}

KktResidual kkt_residual(const ProblemInstance& inst, const std::vector<Vec>& p,
                         const std::vector<std::array<Vec, 2>>& w) {
    const int m = inst.prosumer_count();
    if (static_cast<int>(p.size()) != m || static_cast<int>(w.size()) != inst.edge_count())
        throw std::invalid_argument("kkt_residual: dimension mismatch");

    KktResidual res;
    for (int i = 0; i < m; ++i) {
        Vec g = cost_gradient(inst, i, p[i]);
        for (int j : inst.network.neighbors[i]) {
            const int e = inst.edge_index(i, j);
            omega_scatter_add(inst, i, j, w[e][inst.edge_side(e, i)], g);
        }
        Vec shifted(p[i].size());
        for (std::size_t c = 0; c < shifted.size(); ++c) shifted[c] = p[i][c] - g[c];
        Vec proj = project_prosumer(inst, i, shifted);
        double sq = 0.0;
        for (std::size_t c = 0; c < proj.size(); ++c) {
            const double d = p[i][c] - proj[c];
            sq += d * d;
        }
        res.stationarity += std::sqrt(sq);
    }

    double sq = 0.0;
    for (int e = 0; e < inst.edge_count(); ++e) {
        auto [i, j] = inst.network.edges[e];
        Vec qi = omega_gather(inst, i, j, p[i]);
        Vec qj = omega_gather(inst, j, i, p[j]);
        for (int t = 0; t < inst.horizon; ++t) {
            const double d = qi[t] + qj[t] - inst.constraints.loss[e][t];
            sq += d * d;
        }
    }
    res.coupling = std::sqrt(sq);
    return res;
}

}  // namespace p2pem
