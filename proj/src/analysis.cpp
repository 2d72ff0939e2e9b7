#include "p2pem/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace p2pem {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

double TsWeights::norm(std::span<const double> u) const {
    if (u.size() != diag.size()) throw std::invalid_argument("ts_norm: dimension mismatch");
    double s = 0.0;
    for (std::size_t c = 0; c < u.size(); ++c) s += diag[c] * u[c] * u[c];
    return std::sqrt(s);
}

double TsWeights::dist(std::span<const double> u, std::span<const double> v) const {
    if (u.size() != diag.size() || v.size() != diag.size())
        throw std::invalid_argument("ts_dist: dimension mismatch");
    double s = 0.0;
    for (std::size_t c = 0; c < u.size(); ++c) {
        const double d = u[c] - v[c];
        s += diag[c] * d * d;
    }
    return std::sqrt(s);
}

double TsWeights::lambda_max() const {
    return diag.empty() ? 1.0 : *std::max_element(diag.begin(), diag.end());
}

double TsWeights::lambda_min() const {
    return diag.empty() ? 1.0 : *std::min_element(diag.begin(), diag.end());
}

TsWeights ts_weights(const ProblemInstance& inst, const StepConfig& steps) {
    TsWeights w;
    w.diag.reserve(packed_dim(inst));
    for (int e = 0; e < inst.edge_count(); ++e) {
        if (!(steps.beta[e] > 0.0)) throw std::invalid_argument("ts_weights: beta must be positive");
        for (int c = 0; c < 2 * inst.horizon; ++c) w.diag.push_back(1.0 / steps.beta[e]);
    }
    for (int i = 0; i < inst.prosumer_count(); ++i) {
        if (!(steps.alpha[i] > 0.0))
            throw std::invalid_argument("ts_weights: alpha must be positive");
        for (int c = 0; c < inst.local_dim(i); ++c) w.diag.push_back(1.0 / steps.alpha[i]);
    }
    return w;
}

double fejer_slack(const TsWeights& w, std::span<const double> u_next,
                   std::span<const double> u_now, std::span<const double> u_star) {
    const double dn = w.dist(u_next, u_star);
    const double dc = w.dist(u_now, u_star);
    return dn * dn - dc * dc;
}

const char* ConvergenceReport::csv_header() {
    return "k,dist_ts,coupling,stationarity,fejer_slack,messages,sim_time_ms";
}

void ConvergenceReport::write_csv(std::ostream& os) const {
    os << csv_header() << '\n';
    char buf[512];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%lld,%.17g\n",
                      static_cast<long long>(r.k), r.dist_ts, r.coupling, r.stationarity,
                      r.fejer_slack, static_cast<long long>(r.messages), r.sim_time_ms);
        os << buf;
    }
}

void ConvergenceReport::write_csv_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_csv(os);
}

std::optional<RateFit> rate_fit(const ConvergenceReport& report, std::size_t begin,
                                std::size_t end) {
    end = std::min(end, report.records.size());
    std::vector<double> xs, ys;
    for (std::size_t idx = begin; idx < end; ++idx) {
        const auto& r = report.records[idx];
        if (!(r.dist_ts > 0.0) || !std::isfinite(r.dist_ts)) continue;
        xs.push_back(static_cast<double>(r.k));
        ys.push_back(std::log(r.dist_ts));
    }
    const std::size_t n = xs.size();
    if (n < 2) return std::nullopt;

    double mx = 0.0, my = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        mx += xs[c];
        my += ys[c];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        sxx += (xs[c] - mx) * (xs[c] - mx);
        sxy += (xs[c] - mx) * (ys[c] - my);
        syy += (ys[c] - my) * (ys[c] - my);
    }
    if (sxx == 0.0) return std::nullopt;
    const double slope = sxy / sxx;
    double ss_res = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        const double e = ys[c] - (my + slope * (xs[c] - mx));
        ss_res += e * e;
    }
    RateFit fit;
    fit.rate = std::exp(slope);
    fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
    fit.points = static_cast<int>(n);
    return fit;
}

std::optional<std::size_t> first_contraction_failure(const std::vector<double>& dist,
                                                     double tol) {
    for (std::size_t k = 0; k + 1 < dist.size(); ++k) {
        if (!std::isfinite(dist[k + 1])) return k;
        if (dist[k + 1] > dist[k] * (1.0 + tol) + tol) return k;
    }
    return std::nullopt;
}

double relaxation_bound(double kappa_s, double kappa_p, int delay_bound) {
    const double ksp = kappa_s * kappa_p;
    return 1.0 / (2.0 * delay_bound * std::sqrt(ksp) + ksp);
}

namespace detail {

namespace {

std::vector<int> primal_offsets(const ProblemInstance& inst) {
    std::vector<int> off(inst.prosumer_count() + 1, 0);
    for (int i = 0; i < inst.prosumer_count(); ++i) off[i + 1] = off[i] + inst.local_dim(i);
    return off;
}

using Mat = std::vector<std::vector<double>>;

Mat zeros(int rows, int cols) { return Mat(rows, std::vector<double>(cols, 0.0)); }

Eigen::MatrixXd to_eigen(const Mat& a) {
    Eigen::MatrixXd m(a.size(), a.empty() ? 0 : a[0].size());
    for (std::size_t r = 0; r < a.size(); ++r)
        for (std::size_t c = 0; c < a[r].size(); ++c) m(r, c) = a[r][c];
    return m;
}

double min_eigenvalue(const Mat& a) {
    if (a.empty()) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(a));
    return es.eigenvalues().minCoeff();
}

/* [[diag(1/beta), s * Psi], [s * Psi', diag(1/alpha) + shift I]] */
Mat metric_matrix(const ProblemInstance& inst, const StepConfig& steps, double psi_scale,
                  double primal_shift) {
    const int nw = inst.dual_dim();
    const int nx = inst.primal_dim();
    Mat m = zeros(nw + nx, nw + nx);
    for (int e = 0; e < inst.edge_count(); ++e)
        for (int c = 0; c < 2 * inst.horizon; ++c) {
            const int r = e * 2 * inst.horizon + c;
            m[r][r] = 1.0 / steps.beta[e];
        }
    auto off = primal_offsets(inst);
    for (int i = 0; i < inst.prosumer_count(); ++i)
        for (int c = 0; c < inst.local_dim(i); ++c) {
            const int r = nw + off[i] + c;
            m[r][r] = 1.0 / steps.alpha[i] + primal_shift;
        }
    Mat psi = dense_psi(inst);
    for (int r = 0; r < nw; ++r)
        for (int c = 0; c < nx; ++c) {
            m[r][nw + c] = psi_scale * psi[r][c];
            m[nw + c][r] = psi_scale * psi[r][c];
        }
    return m;
}

}  // namespace

Mat dense_psi(const ProblemInstance& inst) {
    auto off = primal_offsets(inst);
    Mat psi = zeros(inst.dual_dim(), inst.primal_dim());
    const int T = inst.horizon;
    for (int e = 0; e < inst.edge_count(); ++e) {
        auto [i, j] = inst.network.edges[e];
        const int slot_ij = inst.network.neighbor_slot(i, j);
        const int slot_ji = inst.network.neighbor_slot(j, i);
        for (int t = 0; t < T; ++t) {
            psi[e * 2 * T + t][off[i] + t * inst.network.degree(i) + slot_ij] = 1.0;
            psi[e * 2 * T + T + t][off[j] + t * inst.network.degree(j) + slot_ji] = 1.0;
        }
    }
    return psi;
}

Mat dense_ts(const ProblemInstance& inst, const StepConfig& steps) {
    return metric_matrix(inst, steps, 0.0, 0.0);
}

Mat dense_fejer_metric(const ProblemInstance& inst, const StepConfig& steps) {
    // 2 T_d - T_s with T_d = [[1/beta, -Psi/2], [-Psi'/2, 1/alpha - (L_f/4) I]]
    const double lf = smoothness_constants(inst).lipschitz;
    return metric_matrix(inst, steps, -1.0, -0.5 * lf);
}

Mat dense_nonexpansive_metric(const ProblemInstance& inst, const StepConfig& steps) {
    // 2 T_ptilde - T_qtilde - T_s, the primal shift carrying kappa_f L_f / 2
    const auto sc = smoothness_constants(inst);
    return metric_matrix(inst, steps, -1.0, -0.5 * sc.condition_number * sc.lipschitz);
}

}  // namespace detail

bool BoundReport::all_sync_checks_pass() const {
    if (!sync_ok) return false;
    return !dense_checked || min_eig_fejer > 0.0;
}

bool BoundReport::all_async_checks_pass() const {
    if (!async_ok) return false;
    return !dense_checked || min_eig_nonexpansive >= -1e-9;
}

BoundReport bound_suite(const ProblemInstance& inst, const StepConfig& steps,
                        const std::vector<double>& activation_probabilities, int delay_bound,
                        int dense_limit) {
    BoundReport rep;
    rep.alpha = steps.alpha;
    rep.kappa_f = smoothness_constants(inst).condition_number;

    rep.alpha_bound_sync.resize(inst.prosumer_count());
    rep.alpha_bound_async.resize(inst.prosumer_count());
    rep.sync_ok = rep.async_ok = true;
    for (int i = 0; i < inst.prosumer_count(); ++i) {
        rep.alpha_bound_sync[i] = alpha_bound(inst, steps, i, StepRegime::synchronous);
        rep.alpha_bound_async[i] = alpha_bound(inst, steps, i, StepRegime::asynchronous);
        if (!(steps.alpha[i] < rep.alpha_bound_sync[i])) rep.sync_ok = false;
        if (!(steps.alpha[i] <= rep.alpha_bound_async[i] * (1.0 + 1e-12))) rep.async_ok = false;
    }

    rep.kappa_s = ts_weights(inst, steps).condition_number();
    if (!activation_probabilities.empty()) {
        const auto [mn, mx] =
            std::minmax_element(activation_probabilities.begin(), activation_probabilities.end());
        rep.kappa_p = *mx / *mn;
    }
    rep.theta_bound = relaxation_bound(rep.kappa_s, rep.kappa_p, delay_bound);

    rep.min_eig_fejer = kNan;
    rep.min_eig_nonexpansive = kNan;
    if (packed_dim(inst) <= dense_limit) {
        rep.dense_checked = true;
        rep.min_eig_fejer = detail::min_eigenvalue(detail::dense_fejer_metric(inst, steps));
        rep.min_eig_nonexpansive =
            detail::min_eigenvalue(detail::dense_nonexpansive_metric(inst, steps));
    }
    return rep;
}

}  // namespace p2pem
