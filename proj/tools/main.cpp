#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <json.hpp>

#include "p2pem/analysis.hpp"
#include "p2pem/async_sim.hpp"
#include "p2pem/oracle.hpp"
#include "p2pem/scenario_io.hpp"
#include "p2pem/sync_solver.hpp"

namespace {

using namespace p2pem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;

struct Options {
    std::string scenario;
    std::string mode = "syn";
    std::string out;
    std::string sim_config;
    std::uint64_t seed = 1;
    int seeds = 1;
    int delay_bound = -1;        // < 0: keep the config file's value (or 0)
    std::string delay_mode;      // empty: keep the config file's value
    double theta = -1.0;
    double tol = 1e-8;
    std::int64_t max_iter = 200000;
    double sigma = 0.95;
    double beta = 1.0;
    double alpha = -1.0;  // > 0 overrides every prosumer's primal step
};

void apply_alpha_override(const Options& opt, StepConfig& steps) {
    if (opt.alpha > 0.0)
        for (auto& a : steps.alpha) a = opt.alpha;
}

std::string default_prefix(const Options& opt) {
    const auto stem = std::filesystem::path(opt.scenario).stem().string();
    return stem + "_" + opt.mode;
}

std::optional<std::vector<double>> reference_packed(const ProblemInstance& inst,
                                                    const std::string& scenario_path,
                                                    json& summary) {
    const std::string cache = scenario_path + ".oracle.json";
    try {
        OracleSolution sol;
        if (std::filesystem::exists(cache)) {
            sol = load_oracle(inst, cache);
            summary["oracle"] = {{"source", cache}};
        } else {
            sol = solve_reference(inst);
            summary["oracle"] = {{"source", "computed"}};
        }
        summary["oracle"]["objective"] = sol.objective;
        summary["oracle"]["social_cost_with_offsets"] = sol.objective + inst.total_cost_offset();
        summary["oracle"]["kkt_stationarity"] = sol.residual.stationarity;
        summary["oracle"]["kkt_coupling"] = sol.residual.coupling;
        return sol.packed(inst);
    } catch (const std::exception& e) {
        summary["oracle"] = {{"source", "unavailable"}, {"error", e.what()}};
        return std::nullopt;
    }
}

json bounds_to_json(const BoundReport& rep) {
    json j;
    j["sync_ok"] = rep.sync_ok;
    j["async_ok"] = rep.async_ok;
    j["alpha"] = rep.alpha;
    j["alpha_bound_sync"] = rep.alpha_bound_sync;
    j["alpha_bound_async"] = rep.alpha_bound_async;
    j["theta_bound"] = rep.theta_bound;
    j["kappa_s"] = rep.kappa_s;
    j["kappa_p"] = rep.kappa_p;
    j["kappa_f"] = rep.kappa_f;
    if (rep.dense_checked) {
        j["min_eig_fejer_metric"] = rep.min_eig_fejer;
        j["min_eig_nonexpansive_metric"] = rep.min_eig_nonexpansive;
    }
    j["rate_constant"] = rep.rate_constant_note;
    return j;
}

json report_tail_to_json(const ConvergenceReport& report) {
    json j;
    if (report.records.empty()) return j;
    const auto& last = report.records.back();
    j["k"] = last.k;
    j["coupling"] = last.coupling;
    j["stationarity"] = last.stationarity;
    if (std::isfinite(last.dist_ts)) j["dist_ts"] = last.dist_ts;
    j["messages"] = last.messages;
    j["sim_time_ms"] = last.sim_time_ms;
    const std::size_t n = report.records.size();
    if (auto fit = rate_fit(report, n / 2, n)) {
        j["rate"] = fit->rate;
        j["rate_r_squared"] = fit->r_squared;
        j["rate_points"] = fit->points;
    }
    return j;
}

void write_summary(const std::string& prefix, const json& summary) {
    std::ofstream os(prefix + ".summary.json", std::ios::binary);
    os << summary.dump(2) << '\n';
}

int named_divergence(const ProblemInstance& inst, const StepConfig& steps, bool async_regime,
                     const std::string& what) {
    auto rep = bound_suite(inst, steps, {}, 0);
    std::cerr << "error: " << what << "\n";
    for (int i = 0; i < inst.prosumer_count(); ++i) {
        const double bound = async_regime ? rep.alpha_bound_async[i] : rep.alpha_bound_sync[i];
        if (!(steps.alpha[i] < bound))
            std::cerr << "  violated: alpha[" << i + 1 << "] = " << steps.alpha[i]
                      << " exceeds the admissible bound " << bound << "\n";
    }
    if (rep.dense_checked && rep.min_eig_fejer <= 0.0)
        std::cerr << "  violated: contraction metric has min eigenvalue " << rep.min_eig_fejer
                  << " (must be positive)\n";
    return kExitDivergence;
}

/* Budget exhausted under a violated bound counts as divergence. */
bool bound_violation_blocks(const BoundReport& rep, bool async_regime) {
    return async_regime ? !rep.all_async_checks_pass() : !rep.all_sync_checks_pass();
}

int run_validate(const Options& opt) {
    auto diagnostics = validate_scenario_file(opt.scenario);
    if (diagnostics.empty()) {
        std::cout << opt.scenario << ": OK\n";
        return kExitOk;
    }
    for (const auto& d : diagnostics) std::cout << d << "\n";
    return kExitValidation;
}

int run_oracle(const Options& opt) {
    auto inst = load_scenario(opt.scenario);
    auto sol = solve_reference(inst);
    const std::string out = opt.out.empty() ? opt.scenario + ".oracle.json" : opt.out;
    save_oracle(sol, out);
    std::cout << "objective " << sol.objective << " (with constant offsets "
              << sol.objective + inst.total_cost_offset() << ")  kkt(stationarity "
              << sol.residual.stationarity << ", coupling " << sol.residual.coupling << ")\n"
              << "wrote " << out << "\n";
    return kExitOk;
}

int run_sync_mode(const Options& opt) {
    auto inst = load_scenario(opt.scenario);
    auto steps = default_steps(inst, opt.sigma, StepRegime::synchronous, opt.beta);
    apply_alpha_override(opt, steps);

    json summary;
    summary["mode"] = "syn";
    summary["scenario"] = opt.scenario;
    SyncRunOptions ropt;
    ropt.u_star = reference_packed(inst, opt.scenario, summary);

    const std::string prefix = opt.out.empty() ? default_prefix(opt) : opt.out;
    try {
        auto res = run_syn(inst, steps, zero_state(inst), {opt.tol, opt.max_iter}, ropt);
        res.report.write_csv_file(prefix + ".csv");
        auto bounds = bound_suite(inst, steps, {}, 0);
        summary["converged"] = res.converged;
        summary["iterations"] = res.state.iter;
        summary["terminal"] = report_tail_to_json(res.report);
        summary["bounds"] = bounds_to_json(bounds);
        write_summary(prefix, summary);
        if (!res.converged && bound_violation_blocks(bounds, false))
            return named_divergence(inst, steps, false,
                                    "no convergence within the budget; step sizes violate "
                                    "their bound");
        std::cout << (res.converged ? "converged" : "stopped") << " after " << res.state.iter
                  << " iterations; trace " << prefix << ".csv\n";
        return kExitOk;
    } catch (const DivergenceError& e) {
        return named_divergence(inst, steps, false, e.what());
    }
}

SimConfig assemble_sim_config(const Options& opt, const ProblemInstance& inst,
                              AsyncStopRule& stop) {
    SimConfig cfg;
    if (!opt.sim_config.empty()) {
        auto file = load_sim_config(opt.sim_config, inst.prosumer_count());
        cfg = file.sim;
        stop = file.stop;
        cfg.seed = opt.seed;
    } else {
        cfg.activation = ActivationModel::uniform(inst.prosumer_count());
        cfg.seed = opt.seed;
    }
    if (opt.delay_bound >= 0) cfg.delay.bound = opt.delay_bound;
    if (opt.delay_mode == "fixed")
        cfg.delay.mode = DelayModel::Mode::fixed;
    else if (opt.delay_mode == "sweep")
        cfg.delay.mode = DelayModel::Mode::sweep_snapshot;
    else if (opt.delay_mode == "uniform")
        cfg.delay.mode = DelayModel::Mode::uniform_random;
    if (opt.theta >= 0.0) cfg.theta = opt.theta;
    stop.tol = opt.tol;
    stop.max_ticks = opt.max_iter;
    cfg.log_events = false;
    return cfg;
}

int run_async_mode(const Options& opt) {
    auto inst = load_scenario(opt.scenario);
    auto steps = default_steps(inst, opt.sigma, StepRegime::asynchronous, opt.beta);
    apply_alpha_override(opt, steps);

    json summary;
    summary["mode"] = "asyn";
    summary["scenario"] = opt.scenario;
    AsyncRunOptions ropt;
    ropt.u_star = reference_packed(inst, opt.scenario, summary);

    AsyncStopRule stop;
    auto cfg = assemble_sim_config(opt, inst, stop);
    const std::string prefix = opt.out.empty() ? default_prefix(opt) : opt.out;
    try {
        SimWorld world(inst, steps, cfg, zero_state(inst));
        summary["theta"] = world.theta();
        summary["delay_bound"] = cfg.delay.bound;
        summary["seed"] = cfg.seed;
        auto res = run_asyn(world, stop, ropt);
        res.report.write_csv_file(prefix + ".csv");
        auto bounds = bound_suite(inst, steps, cfg.activation.probabilities, cfg.delay.bound);
        summary["converged"] = res.converged;
        summary["ticks"] = res.ticks;
        summary["terminal"] = report_tail_to_json(res.report);
        summary["bounds"] = bounds_to_json(bounds);
        write_summary(prefix, summary);
        if (!res.converged && bound_violation_blocks(bounds, true))
            return named_divergence(inst, steps, true,
                                    "no convergence within the budget; step sizes violate "
                                    "their bound");
        std::cout << (res.converged ? "converged" : "stopped") << " after " << res.ticks
                  << " ticks; trace " << prefix << ".csv\n";
        return kExitOk;
    } catch (const DivergenceError& e) {
        return named_divergence(inst, steps, true, e.what());
    }
}

int run_compare_mode(const Options& opt) {
    auto inst = load_scenario(opt.scenario);
    json summary;
    summary["mode"] = "compare";
    summary["scenario"] = opt.scenario;
    summary["base_seed"] = opt.seed;
    auto u_star = reference_packed(inst, opt.scenario, summary);
    const std::string prefix = opt.out.empty() ? default_prefix(opt) : opt.out;

    try {
        // synchronous baseline; deterministic, so independent of the seeds
        auto sync_steps = default_steps(inst, opt.sigma, StepRegime::synchronous, opt.beta);
        SyncRunOptions sopt;
        sopt.u_star = u_star;
        auto sres = run_syn(inst, sync_steps, zero_state(inst), {opt.tol, opt.max_iter}, sopt);
        sres.report.write_csv_file(prefix + ".syn.csv");
        summary["syn"] = {{"converged", sres.converged},
                          {"iterations", sres.state.iter},
                          {"terminal", report_tail_to_json(sres.report)}};

        auto async_steps = default_steps(inst, opt.sigma, StepRegime::asynchronous, opt.beta);
        json per_d = json::array();
        for (int d : {0, 10, 20}) {
            json block;
            block["d"] = d;
            json runs = json::array();
            std::vector<double> ticks;
            for (int s = 0; s < opt.seeds; ++s) {
                SimConfig cfg;
                cfg.activation = ActivationModel::uniform(inst.prosumer_count());
                cfg.delay = DelayModel{DelayModel::Mode::uniform_random, d};
                cfg.theta = opt.theta;
                cfg.seed = derive_seed(opt.seed, static_cast<std::uint64_t>(s));
                cfg.log_events = false;
                SimWorld world(inst, async_steps, cfg, zero_state(inst));
                AsyncRunOptions aopt;
                aopt.u_star = u_star;
                auto res = run_asyn(world, {opt.tol, opt.max_iter}, aopt);
                if (s == 0) {
                    char name[64];
                    std::snprintf(name, sizeof name, ".asyn_d%d.csv", d);
                    res.report.write_csv_file(prefix + name);
                }
                runs.push_back({{"seed", cfg.seed},
                                {"converged", res.converged},
                                {"ticks", res.ticks},
                                {"messages", res.report.records.back().messages},
                                {"sim_time_ms", res.report.records.back().sim_time_ms},
                                {"terminal_coupling", res.report.records.back().coupling}});
                ticks.push_back(static_cast<double>(res.ticks));
            }
            std::sort(ticks.begin(), ticks.end());
            const std::size_t n = ticks.size();
            block["median_ticks"] =
                n % 2 == 1 ? ticks[n / 2] : 0.5 * (ticks[n / 2 - 1] + ticks[n / 2]);
            block["runs"] = runs;
            per_d.push_back(block);
        }
        summary["asyn"] = per_d;
        summary["bounds"] = bounds_to_json(bound_suite(
            inst, async_steps, ActivationModel::uniform(inst.prosumer_count()).probabilities, 10));
        write_summary(prefix, summary);
        std::cout << "wrote " << prefix << ".summary.json\n";
        return kExitOk;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDivergence;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized dynamic peer-to-peer energy trading: synchronous and "
                 "asynchronous primal-dual solvers with a delay-tolerant simulator"};
    Options opt;
    app.add_option("--scenario", opt.scenario, "Scenario JSON file")->required();
    app.add_option("--mode", opt.mode, "syn | asyn | compare | oracle | validate")
        ->check(CLI::IsMember({"syn", "asyn", "compare", "oracle", "validate"}));
    app.add_option("--seed", opt.seed, "Base seed for randomized runs");
    app.add_option("--seeds", opt.seeds, "Number of seeds in compare mode")
        ->check(CLI::PositiveNumber);
    app.add_option("--delay-bound", opt.delay_bound, "Delay bound d in ticks (asyn mode)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--delay-mode", opt.delay_mode, "fixed | uniform | sweep")
        ->check(CLI::IsMember({"fixed", "uniform", "sweep"}));
    app.add_option("--theta", opt.theta, "Relaxation factor; negative selects 0.95x the bound");
    app.add_option("--tol", opt.tol, "Stopping tolerance")->check(CLI::PositiveNumber);
    app.add_option("--max-iter", opt.max_iter, "Iteration / tick budget")
        ->check(CLI::PositiveNumber);
    app.add_option("--out", opt.out, "Output path prefix (default: <scenario>_<mode>)");
    app.add_option("--sigma", opt.sigma, "Step-size safety factor in (0, 1]");
    app.add_option("--beta", opt.beta, "Uniform dual step size")->check(CLI::PositiveNumber);
    app.add_option("--alpha", opt.alpha,
                   "Uniform primal step override (expert; may violate the bounds)");
    app.add_option("--config", opt.sim_config, "Simulation config JSON (asyn mode)");
    CLI11_PARSE(app, argc, argv);

    try {
        if (opt.mode == "validate") return run_validate(opt);
        if (opt.mode == "oracle") return run_oracle(opt);
        if (opt.mode == "syn") return run_sync_mode(opt);
        if (opt.mode == "asyn") return run_async_mode(opt);
        if (opt.mode == "compare") return run_compare_mode(opt);
    } catch (const ScenarioParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
