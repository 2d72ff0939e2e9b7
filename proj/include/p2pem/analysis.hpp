#ifndef P2PEM_ANALYSIS_HPP
#define P2PEM_ANALYSIS_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "p2pem/problem.hpp"
#include "p2pem/state.hpp"

namespace p2pem {

/* Diagonal weights of the step-size metric blockdiag(1/beta, 1/alpha)
 * in the packed [w; x] layout.  Positive definite by construction. */
struct TsWeights {
    std::vector<double> diag;

    double norm(std::span<const double> u) const;
    double dist(std::span<const double> u, std::span<const double> v) const;
    double lambda_max() const;
    double lambda_min() const;
    double condition_number() const { return lambda_max() / lambda_min(); }
};

TsWeights ts_weights(const ProblemInstance& inst, const StepConfig& steps);

/* ||u_next - u_star||^2 - ||u_now - u_star||^2 in the weighted norm;
 * nonpositive along a compliant synchronous run. */
double fejer_slack(const TsWeights& w, std::span<const double> u_next,
                   std::span<const double> u_now, std::span<const double> u_star);

/* One measurement row.  Fields without a defined value (no reference
 * solution, first record) are NaN. */
struct ReportRecord {
    std::int64_t k = 0;
    double dist_ts = 0.0;       // ||U^k - U*||_{T_s}
    double coupling = 0.0;
    double stationarity = 0.0;
    double fejer_slack = 0.0;
    std::int64_t messages = 0;  // cumulative messages delivered
    double sim_time_ms = 0.0;   // simulated wall time
};

struct ConvergenceReport {
    std::vector<ReportRecord> records;

    void write_csv(std::ostream& os) const;
    void write_csv_file(const std::string& path) const;
    static const char* csv_header();  // "k,dist_ts,coupling,..."
};

/* Least-squares fit of log(dist_ts) over records [begin, end); the rate is
 * exp(slope).  Records with nonpositive or non-finite distance are skipped;
 * nullopt when fewer than two usable records remain (already converged). */
struct RateFit {
    double rate = 1.0;
    double r_squared = 0.0;
    int points = 0;
};
std::optional<RateFit> rate_fit(const ConvergenceReport& report,
                                std::size_t begin, std::size_t end);

/* Every checkable step-size precondition in one report.  The dense matrix
 * checks materialize the operator blocks and are run only when the packed
 * dimension is at most `dense_limit` (the solvers stay matrix-free). */
struct BoundReport {
    Vec alpha;                      // as configured
    Vec alpha_bound_sync;           // strict upper bounds, per prosumer
    Vec alpha_bound_async;
    bool sync_ok = false;           // alpha_i < sync bound for all i
    bool async_ok = false;          // alpha_i <= async bound for all i
    double theta_bound = 1.0;       // relaxation bound for the given d
    double kappa_s = 1.0;
    double kappa_p = 1.0;
    double kappa_f = 1.0;
    // dense eigenvalue checks; NaN when the instance is above dense_limit
    double min_eig_fejer = 0.0;     // 2 T_d - T_s, require > 0
    double min_eig_nonexpansive = 0.0;  // 2 T_ptilde - T_qtilde - T_s, require >= 0
    bool dense_checked = false;
    // the linear-rate constant contains an unknown subregularity modulus
    std::string rate_constant_note = "not computable (eta unknown)";

    bool all_sync_checks_pass() const;
    bool all_async_checks_pass() const;
};

BoundReport bound_suite(const ProblemInstance& inst, const StepConfig& steps,
                        const std::vector<double>& activation_probabilities, int delay_bound,
                        int dense_limit = 200);

/* 1 / (2 d sqrt(ks kp) + ks kp); equals 1 when d = 0 and both condition
 * numbers are 1. */
double relaxation_bound(double kappa_s, double kappa_p, int delay_bound);

/* Scans a distance trace for contraction failure: returns the first index
 * k with dist[k+1] > dist[k] * (1 + tol), or nullopt if monotone. */
std::optional<std::size_t> first_contraction_failure(const std::vector<double>& dist,
                                                     double tol = 1e-9);

namespace detail {
/* Dense forms of the operator blocks, for bound checks and test oracles
 * on small instances. Row-major, packed [w; x] layout. */
std::vector<std::vector<double>> dense_psi(const ProblemInstance& inst);
std::vector<std::vector<double>> dense_ts(const ProblemInstance& inst, const StepConfig& steps);
std::vector<std::vector<double>> dense_fejer_metric(const ProblemInstance& inst,
                                                    const StepConfig& steps);  // 2 T_d - T_s
std::vector<std::vector<double>> dense_nonexpansive_metric(const ProblemInstance& inst,
                                                           const StepConfig& steps);
}  // namespace detail

}  // namespace p2pem

#endif
