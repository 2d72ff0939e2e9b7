#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "p2pem/analysis.hpp"
#include "p2pem/async_sim.hpp"
#include "p2pem/oracle.hpp"
#include "p2pem/scenario_io.hpp"
#include "p2pem/sync_solver.hpp"

namespace py = pybind11;
using namespace p2pem;

namespace {

py::dict report_to_dict(const ConvergenceReport& report) {
    py::list k, dist, coupling, stationarity, slack, messages, sim_time;
    for (const auto& r : report.records) {
        k.append(r.k);
        dist.append(r.dist_ts);
        coupling.append(r.coupling);
        stationarity.append(r.stationarity);
        slack.append(r.fejer_slack);
        messages.append(r.messages);
        sim_time.append(r.sim_time_ms);
    }
    py::dict d;
    d["k"] = k;
    d["dist_ts"] = dist;
    d["coupling"] = coupling;
    d["stationarity"] = stationarity;
    d["fejer_slack"] = slack;
    d["messages"] = messages;
    d["sim_time_ms"] = sim_time;
    return d;
}

SimConfig make_sim_config(const ProblemInstance& inst, std::uint64_t seed, int delay_bound,
                          const std::string& delay_mode, double theta,
                          const std::vector<double>& activation_rates) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.activation = activation_rates.empty()
                         ? ActivationModel::uniform(inst.prosumer_count())
                         : ActivationModel::from_rates(activation_rates);
    DelayModel::Mode mode = DelayModel::Mode::uniform_random;
    if (delay_mode == "fixed")
        mode = DelayModel::Mode::fixed;
    else if (delay_mode == "sweep")
        mode = DelayModel::Mode::sweep_snapshot;
    else if (delay_mode != "uniform")
        throw std::invalid_argument("delay_mode must be fixed, uniform, or sweep");
    cfg.delay = DelayModel{mode, delay_bound};
    cfg.theta = theta;
    cfg.log_events = false;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Decentralized dynamic P2P energy trading: synchronous and asynchronous "
              "primal-dual solvers with a delay-tolerant simulator";

    py::class_<ProblemInstance>(m, "ProblemInstance")
        .def_property_readonly("prosumer_count", &ProblemInstance::prosumer_count)
        .def_property_readonly("edge_count", &ProblemInstance::edge_count)
        .def_property_readonly("horizon", [](const ProblemInstance& p) { return p.horizon; })
        .def_property_readonly("edges",
                               [](const ProblemInstance& p) { return p.network.edges; })
        .def("local_dim", &ProblemInstance::local_dim)
        .def("cost_value",
             [](const ProblemInstance& p, int i, const Vec& x) { return cost_value(p, i, x); })
        .def("cost_gradient", [](const ProblemInstance& p, int i, const Vec& x) {
            return cost_gradient(p, i, x);
        });

    py::class_<SolverState>(m, "SolverState")
        .def_property_readonly("iter", [](const SolverState& s) { return s.iter; })
        .def_property_readonly("p", [](const SolverState& s) { return s.p; })
        .def_property_readonly("w", [](const SolverState& s) {
            std::vector<std::vector<Vec>> out;
            for (const auto& we : s.w) out.push_back({we[0], we[1]});
            return out;
        });

    py::class_<StepConfig>(m, "StepConfig")
        .def_readwrite("alpha", &StepConfig::alpha)
        .def_readwrite("beta", &StepConfig::beta);

    m.def("load_scenario", &load_scenario, py::arg("path"),
          "Load and validate a scenario JSON file");
    m.def("parse_scenario", &parse_scenario, py::arg("json_text"),
          py::arg("origin") = "<string>");
    m.def("validate_scenario_file", &validate_scenario_file, py::arg("path"),
          "Return a list of diagnostics; empty means valid");

    m.def(
        "default_steps",
        [](const ProblemInstance& inst, double sigma, const std::string& regime, double beta) {
            const auto r = regime == "async" ? StepRegime::asynchronous
                                             : StepRegime::synchronous;
            return default_steps(inst, sigma, r, beta);
        },
        py::arg("instance"), py::arg("sigma") = 0.95, py::arg("regime") = "sync",
        py::arg("beta") = 1.0);

    m.def(
        "smoothness_constants",
        [](const ProblemInstance& inst) {
            const auto sc = smoothness_constants(inst);
            py::dict d;
            d["lipschitz"] = sc.lipschitz;
            d["strong_convexity"] = sc.strong_convexity;
            d["condition_number"] = sc.condition_number;
            return d;
        },
        py::arg("instance"));

    m.def(
        "kkt_residual",
        [](const ProblemInstance& inst, const std::vector<Vec>& p,
           const std::vector<std::vector<Vec>>& w) {
            std::vector<std::array<Vec, 2>> halves;
            for (const auto& we : w) {
                if (we.size() != 2) throw std::invalid_argument("w entries need two halves");
                halves.push_back({we[0], we[1]});
            }
            const auto r = kkt_residual(inst, p, halves);
            return py::make_tuple(r.stationarity, r.coupling);
        },
        py::arg("instance"), py::arg("p"), py::arg("w"));

    m.def(
        "project_feasible",
        [](const std::string& role, double lo, double hi, const Vec& v) {
            TimeSliceSet set{role == "seller" ? Role::seller : Role::buyer, lo, hi};
            return project_feasible(set, v);
        },
        py::arg("role"), py::arg("lo"), py::arg("hi"), py::arg("v"));

    m.def("edge_prox",
          [](double beta, const Vec& w_self, const Vec& w_peer, const Vec& q_self,
             const Vec& q_peer, const Vec& loss) {
              return edge_prox(beta, w_self, w_peer, q_self, q_peer, loss);
          });

    m.def(
        "run_syn",
        [](const ProblemInstance& inst, const StepConfig& steps, double tol,
           std::int64_t max_iter) {
            auto res = run_syn(inst, steps, zero_state(inst), {tol, max_iter});
            py::dict d;
            d["converged"] = res.converged;
            d["iterations"] = res.state.iter;
            d["p"] = res.state.p;
            d["report"] = report_to_dict(res.report);
            return d;
        },
        py::arg("instance"), py::arg("steps"), py::arg("tol") = 1e-8,
        py::arg("max_iter") = 100000);

    m.def(
        "run_asyn",
        [](const ProblemInstance& inst, const StepConfig& steps, std::uint64_t seed,
           int delay_bound, const std::string& delay_mode, double theta,
           const std::vector<double>& activation_rates, double tol, std::int64_t max_ticks) {
            auto cfg = make_sim_config(inst, seed, delay_bound, delay_mode, theta,
                                       activation_rates);
            SimWorld world(inst, steps, cfg, zero_state(inst));
            auto res = run_asyn(world, {tol, max_ticks});
            py::dict d;
            d["converged"] = res.converged;
            d["ticks"] = res.ticks;
            d["theta"] = world.theta();
            d["messages"] = world.messages_delivered();
            d["sim_time_ms"] = world.sim_time_ms();
            d["p"] = res.state.p;
            d["report"] = report_to_dict(res.report);
            return d;
        },
        py::arg("instance"), py::arg("steps"), py::arg("seed") = 1, py::arg("delay_bound") = 0,
        py::arg("delay_mode") = "uniform", py::arg("theta") = -1.0,
        py::arg("activation_rates") = std::vector<double>{}, py::arg("tol") = 1e-8,
        py::arg("max_ticks") = 1000000);

    m.def(
        "theta_bound",
        [](const ProblemInstance& inst, const StepConfig& steps,
           const std::vector<double>& activation_rates, int delay_bound) {
            const auto act = activation_rates.empty()
                                 ? ActivationModel::uniform(inst.prosumer_count())
                                 : ActivationModel::from_rates(activation_rates);
            return theta_bound(inst, steps, act, delay_bound);
        },
        py::arg("instance"), py::arg("steps"),
        py::arg("activation_rates") = std::vector<double>{}, py::arg("delay_bound") = 0);

    m.def(
        "solve_reference",
        [](const ProblemInstance& inst, double tol, std::int64_t max_iter) {
            auto sol = solve_reference(inst, tol, max_iter);
            py::dict d;
            d["p_star"] = sol.p_star;
            std::vector<std::vector<Vec>> w;
            for (const auto& we : sol.w_star) w.push_back({we[0], we[1]});
            d["w_star"] = w;
            d["objective"] = sol.objective;
            d["kkt_stationarity"] = sol.residual.stationarity;
            d["kkt_coupling"] = sol.residual.coupling;
            return d;
        },
        py::arg("instance"), py::arg("tol") = 1e-12, py::arg("max_iter") = 200000);

    m.def(
        "bound_suite",
        [](const ProblemInstance& inst, const StepConfig& steps,
           const std::vector<double>& activation_probabilities, int delay_bound) {
            const auto rep = bound_suite(inst, steps, activation_probabilities, delay_bound);
            py::dict d;
            d["sync_ok"] = rep.sync_ok;
            d["async_ok"] = rep.async_ok;
            d["alpha_bound_sync"] = rep.alpha_bound_sync;
            d["alpha_bound_async"] = rep.alpha_bound_async;
            d["theta_bound"] = rep.theta_bound;
            d["kappa_s"] = rep.kappa_s;
            d["kappa_p"] = rep.kappa_p;
            d["kappa_f"] = rep.kappa_f;
            d["min_eig_fejer_metric"] = rep.min_eig_fejer;
            d["min_eig_nonexpansive_metric"] = rep.min_eig_nonexpansive;
            d["dense_checked"] = rep.dense_checked;
            d["rate_constant"] = rep.rate_constant_note;
            return d;
        },
        py::arg("instance"), py::arg("steps"),
        py::arg("activation_probabilities") = std::vector<double>{},
        py::arg("delay_bound") = 0);
}
