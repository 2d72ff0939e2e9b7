#include "p2pem/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace p2pem {

namespace {

double inf_norm_diff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t c = 0; c < a[i].size(); ++c)
            m = std::max(m, std::abs(a[i][c] - b[i][c]));
    return m;
}

/* Exact projection onto the edge couplings: each coordinate pair
 * (p_{i,j,t}, p_{j,i,t}) moves half the violation. */
std::vector<Vec> project_couplings(const ProblemInstance& inst, std::vector<Vec> p) {
    for (int e = 0; e < inst.edge_count(); ++e) {
        auto [i, j] = inst.network.edges[e];
        const int si = inst.network.neighbor_slot(i, j);
        const int sj = inst.network.neighbor_slot(j, i);
        const int di = inst.network.degree(i);
        const int dj = inst.network.degree(j);
        for (int t = 0; t < inst.horizon; ++t) {
            const int ci = t * di + si;
            const int cj = t * dj + sj;
            const double shift = 0.5 * (p[i][ci] + p[j][cj] - inst.constraints.loss[e][t]);
            p[i][ci] -= shift;
            p[j][cj] -= shift;
        }
    }
    return p;
}

std::vector<Vec> project_prosumer_sets(const ProblemInstance& inst, std::vector<Vec> p) {
    for (int i = 0; i < inst.prosumer_count(); ++i) p[i] = project_prosumer(inst, i, p[i]);
    return p;
}

std::vector<Vec> add_scaled(std::vector<Vec> a, const std::vector<Vec>& b, double s) {
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t c = 0; c < a[i].size(); ++c) a[i][c] += s * b[i][c];
    return a;
}

}  // namespace

std::vector<Vec> project_intersection(const ProblemInstance& inst, const std::vector<Vec>& p0,
                                      double tol, int max_rounds) {
    // Dykstra with two correction terms; plain alternation would drift for
    // the non-affine prosumer sets
    std::vector<Vec> x = p0;
    std::vector<Vec> corr_a(p0.size()), corr_b(p0.size());
    for (std::size_t i = 0; i < p0.size(); ++i) {
        corr_a[i].assign(p0[i].size(), 0.0);
        corr_b[i].assign(p0[i].size(), 0.0);
    }
    double gap = std::numeric_limits<double>::infinity();
    for (int round = 0; round < max_rounds; ++round) {
        auto y = project_prosumer_sets(inst, add_scaled(x, corr_a, 1.0));
        for (std::size_t i = 0; i < y.size(); ++i)
            for (std::size_t c = 0; c < y[i].size(); ++c)
                corr_a[i][c] = x[i][c] + corr_a[i][c] - y[i][c];
        auto z = project_couplings(inst, add_scaled(y, corr_b, 1.0));
        for (std::size_t i = 0; i < z.size(); ++i)
            for (std::size_t c = 0; c < z[i].size(); ++c)
                corr_b[i][c] = y[i][c] + corr_b[i][c] - z[i][c];
        gap = inf_norm_diff(y, z);
        x = std::move(z);
        if (gap <= tol) return x;
    }
    if (gap > 1e-6)
        throw std::runtime_error("project_intersection: Dykstra gap did not vanish; "
                                 "the feasible set appears empty");
    return x;
}

namespace {

/* Dual certificate from stationarity on the active faces: one price per
 * edge-period (both halves of an optimal price signal coincide) plus one
 * set-point multiplier per prosumer-period.  Minimum-norm via SVD. */
std::vector<std::array<Vec, 2>> recover_dual(const ProblemInstance& inst,
                                             const std::vector<Vec>& p) {
    const int T = inst.horizon;
    const int n_pi = inst.edge_count() * T;
    const int n_lam = inst.prosumer_count() * T;
    constexpr double kActiveTol = 1e-9;

    std::vector<double> rhs;
    std::vector<std::array<int, 2>> idx;  // (pi column, lambda column or -1) per row

    for (int i = 0; i < inst.prosumer_count(); ++i) {
        const int deg = inst.network.degree(i);
        Vec sums = xi_sums(inst, i, p[i]);
        for (int t = 0; t < T; ++t) {
            const double lo = inst.constraints.sum_min[i][t];
            const double hi = inst.constraints.sum_max[i][t];
            const bool sum_active =
                sums[t] <= lo + kActiveTol || sums[t] >= hi - kActiveTol;
            for (int s = 0; s < deg; ++s) {
                const int c = t * deg + s;
                if (std::abs(p[i][c]) <= kActiveTol) continue;  // sign face active
                const int j = inst.network.neighbors[i][s];
                const int e = inst.edge_index(i, j);
                idx.push_back({e * T + t, sum_active ? n_pi + i * T + t : -1});
                rhs.push_back(-(2.0 * inst.costs.a[i][c] * p[i][c] + inst.lin_b[i][c]));
            }
        }
    }

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<int>(idx.size()), n_pi + n_lam);
    Eigen::VectorXd b(static_cast<int>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
        A(static_cast<int>(r), idx[r][0]) = 1.0;
        if (idx[r][1] >= 0) A(static_cast<int>(r), idx[r][1]) = 1.0;
        b(static_cast<int>(r)) = rhs[r];
    }
    Eigen::VectorXd sol = Eigen::VectorXd::Zero(n_pi + n_lam);
    if (A.rows() > 0)
        sol = A.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);

    std::vector<std::array<Vec, 2>> w(inst.edge_count());
    for (int e = 0; e < inst.edge_count(); ++e) {
        w[e][0].resize(T);
        w[e][1].resize(T);
        for (int t = 0; t < T; ++t) w[e][0][t] = w[e][1][t] = sol(e * T + t);
    }
    return w;
}

}  // namespace

std::vector<double> OracleSolution::packed(const ProblemInstance& inst) const {
    SolverState s;
    s.p = p_star;
    s.w = w_star;
    return pack_state(inst, s);
}

OracleSolution solve_reference(const ProblemInstance& inst, double tol, std::int64_t max_iter) {
    const auto sc = smoothness_constants(inst);
    const double step = sc.lipschitz > 0.0 ? 1.0 / sc.lipschitz : 1.0;

    std::vector<Vec> x(inst.prosumer_count());
    for (int i = 0; i < inst.prosumer_count(); ++i) x[i].assign(inst.local_dim(i), 0.0);
    x = project_intersection(inst, x);

    for (std::int64_t k = 0; k < max_iter; ++k) {
        std::vector<Vec> g(x.size());
        for (int i = 0; i < inst.prosumer_count(); ++i) g[i] = cost_gradient(inst, i, x[i]);
        auto next = project_intersection(inst, add_scaled(x, g, -step));
        const double move = inf_norm_diff(next, x);
        x = std::move(next);
        if (move <= tol) break;
    }

    OracleSolution sol;
    sol.p_star = std::move(x);
    sol.w_star = recover_dual(inst, sol.p_star);
    sol.objective = 0.0;
    for (int i = 0; i < inst.prosumer_count(); ++i)
        sol.objective += cost_value(inst, i, sol.p_star[i]);
    sol.residual = kkt_residual(inst, sol.p_star, sol.w_star);
    return sol;
}

std::vector<Vec> brute_force_primal(const ProblemInstance& inst) {
    if (inst.primal_dim() > 6)
        throw std::invalid_argument("brute_force_primal: instance too large");
    const int T = inst.horizon;
    const int E = inst.edge_count();
    const int nfree = E * T;  // one free trade per edge-period

    // sign constraints and the implied per-coordinate boxes give a finite range
    struct Range {
        double lo, hi;
    };
    std::vector<Range> ranges(nfree);
    for (int e = 0; e < E; ++e) {
        auto [i, j] = inst.network.edges[e];
        for (int t = 0; t < T; ++t) {
            const double l = inst.constraints.loss[e][t];
            double lo = -std::numeric_limits<double>::infinity();
            double hi = std::numeric_limits<double>::infinity();
            if (inst.role(i, t) == Role::seller)
                lo = std::max(lo, 0.0), hi = std::min(hi, inst.constraints.sum_max[i][t]);
            else
                hi = std::min(hi, 0.0), lo = std::max(lo, inst.constraints.sum_min[i][t]);
            // peer coordinate is l - s
            if (inst.role(j, t) == Role::seller)
                hi = std::min(hi, l), lo = std::max(lo, l - inst.constraints.sum_max[j][t]);
            else
                lo = std::max(lo, l), hi = std::min(hi, l - inst.constraints.sum_min[j][t]);
            ranges[e * T + t] = {lo, hi};
        }
    }

    auto assemble = [&](const std::vector<double>& s) {
        std::vector<Vec> p(inst.prosumer_count());
        for (int i = 0; i < inst.prosumer_count(); ++i) p[i].assign(inst.local_dim(i), 0.0);
        for (int e = 0; e < E; ++e) {
            auto [i, j] = inst.network.edges[e];
            const int ci = inst.network.neighbor_slot(i, j);
            const int cj = inst.network.neighbor_slot(j, i);
            for (int t = 0; t < T; ++t) {
                p[i][t * inst.network.degree(i) + ci] = s[e * T + t];
                p[j][t * inst.network.degree(j) + cj] = inst.constraints.loss[e][t] - s[e * T + t];
            }
        }
        return p;
    };

    auto objective_or_inf = [&](const std::vector<double>& s, double feas_tol) {
        auto p = assemble(s);
        for (int i = 0; i < inst.prosumer_count(); ++i) {
            Vec sums = xi_sums(inst, i, p[i]);
            for (int t = 0; t < T; ++t)
                if (sums[t] < inst.constraints.sum_min[i][t] - feas_tol ||
                    sums[t] > inst.constraints.sum_max[i][t] + feas_tol)
                    return std::numeric_limits<double>::infinity();
        }
        double v = 0.0;
        for (int i = 0; i < inst.prosumer_count(); ++i) v += cost_value(inst, i, p[i]);
        return v;
    };

    std::vector<double> center(nfree), radius(nfree);
    for (int v = 0; v < nfree; ++v) {
        center[v] = 0.5 * (ranges[v].lo + ranges[v].hi);
        radius[v] = 0.5 * (ranges[v].hi - ranges[v].lo);
    }

    const int grid = 51;
    std::vector<double> best = center;
    for (int pass = 0; pass < 3; ++pass) {
        double best_val = std::numeric_limits<double>::infinity();
        std::vector<double> probe(nfree), best_probe = best;
        double max_step = 0.0;
        for (int v = 0; v < nfree; ++v) max_step = std::max(max_step, 2.0 * radius[v] / (grid - 1));
        const double feas_tol = std::max(1e-9, max_step);
        // exhaustive sweep of the grid^nfree lattice
        std::vector<int> ticks(nfree, 0);
        while (true) {
            for (int v = 0; v < nfree; ++v) {
                const double step = 2.0 * radius[v] / (grid - 1);
                probe[v] = std::clamp(center[v] - radius[v] + ticks[v] * step, ranges[v].lo,
                                      ranges[v].hi);
            }
            const double val = objective_or_inf(probe, feas_tol);
            if (val < best_val) {
                best_val = val;
                best_probe = probe;
            }
            int v = 0;
            while (v < nfree && ++ticks[v] == grid) ticks[v++] = 0;
            if (v == nfree) break;
        }
        best = best_probe;
        for (int v = 0; v < nfree; ++v) {
            const double step = 2.0 * radius[v] / (grid - 1);
            center[v] = best[v];
            radius[v] = std::max(step, 1e-4);
        }
    }
    return assemble(best);
}

void save_oracle(const OracleSolution& sol, const std::string& path) {
    nlohmann::json doc;
    doc["p_star"] = sol.p_star;
    nlohmann::json wj = nlohmann::json::array();
    for (const auto& we : sol.w_star) wj.push_back({we[0], we[1]});
    doc["w_star"] = wj;
    doc["objective"] = sol.objective;
    doc["kkt_stationarity"] = sol.residual.stationarity;
    doc["kkt_coupling"] = sol.residual.coupling;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << doc.dump(2) << '\n';
}

OracleSolution load_oracle(const ProblemInstance& inst, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    nlohmann::json doc = nlohmann::json::parse(is);
    OracleSolution sol;
    sol.p_star = doc.at("p_star").get<std::vector<Vec>>();
    for (const auto& we : doc.at("w_star")) {
        std::array<Vec, 2> halves{we.at(0).get<Vec>(), we.at(1).get<Vec>()};
        sol.w_star.push_back(std::move(halves));
    }
    sol.objective = doc.at("objective").get<double>();
    if (static_cast<int>(sol.p_star.size()) != inst.prosumer_count() ||
        static_cast<int>(sol.w_star.size()) != inst.edge_count())
        throw std::runtime_error("oracle cache does not match the instance");
    for (int i = 0; i < inst.prosumer_count(); ++i)
        if (static_cast<int>(sol.p_star[i].size()) != inst.local_dim(i))
            throw std::runtime_error("oracle cache does not match the instance");
    sol.residual = kkt_residual(inst, sol.p_star, sol.w_star);
    return sol;
}

}  // namespace p2pem
