#include "p2pem/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace p2pem {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
    throw ScenarioParseError(origin + ": " + what);
}

Vec number_series(const json& j, int horizon, const std::string& origin,
                  const std::string& field) {
    if (!j.is_array() || static_cast<int>(j.size()) != horizon)
        fail(origin, field + " must be an array of length " + std::to_string(horizon));
    Vec out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) fail(origin, field + " must contain numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

struct ParsedScenario {
    TradingNetwork network;
    int horizon = 0;
    RoleSchedule roles;
    CostProfile costs;
    ConstraintProfile constraints;
};

ParsedScenario parse_document(const json& doc, const std::string& origin) {
    if (!doc.is_object()) fail(origin, "top level must be an object");
    for (const char* key : {"prosumers", "horizon", "roles", "edges", "bounds"})
        if (!doc.contains(key)) fail(origin, std::string("missing required key `") + key + "`");

    const int m = doc.at("prosumers").is_number_integer() ? doc.at("prosumers").get<int>() : 0;
    if (m < 1) fail(origin, "`prosumers` must be a positive integer");
    const int T = doc.at("horizon").is_number_integer() ? doc.at("horizon").get<int>() : 0;
    if (T < 1) fail(origin, "`horizon` must be a positive integer");

    ParsedScenario out;
    out.horizon = T;

    // edges and the neighbor layout first
    const auto& edges_j = doc.at("edges");
    if (!edges_j.is_array() || edges_j.empty()) fail(origin, "`edges` must be a nonempty array");
    std::vector<std::pair<int, int>> edge_list;
    for (const auto& ej : edges_j) {
        const auto& between = ej.at("between");
        if (!between.is_array() || between.size() != 2)
            fail(origin, "edge `between` must be a pair of prosumer ids");
        int i = between[0].get<int>(), j = between[1].get<int>();
        if (i < 1 || j < 1 || i > m || j > m)
            fail(origin, "edge endpoint out of range in `between`");
        edge_list.emplace_back(i - 1, j - 1);
    }
    out.network = TradingNetwork::from_edges(m, edge_list);

    // roles: per-period seller id lists
    const auto& roles_j = doc.at("roles");
    if (!roles_j.is_array() || static_cast<int>(roles_j.size()) != T)
        fail(origin, "`roles` must list the sellers of each of the " + std::to_string(T) +
                         " periods");
    out.roles.roles.assign(T, std::vector<Role>(m, Role::buyer));
    for (int t = 0; t < T; ++t) {
        if (!roles_j[t].is_array()) fail(origin, "`roles` entries must be arrays of ids");
        for (const auto& idj : roles_j[t]) {
            const int id = idj.get<int>();
            if (id < 1 || id > m) fail(origin, "seller id out of range in `roles`");
            out.roles.roles[t][id - 1] = Role::seller;
        }
    }

    // per-edge coefficient series, scattered into the local layouts
    auto blank = [&] {
        std::vector<Vec> f(m);
        for (int i = 0; i < m; ++i) f[i].assign(T * out.network.degree(i), 0.0);
        return f;
    };
    out.costs.a = blank();
    out.costs.b_trade = blank();
    out.costs.b_fee = blank();
    out.costs.b_rep = blank();
    out.costs.c = blank();
    out.constraints.loss.assign(out.network.edges.size(), Vec(T, 0.0));

    for (const auto& ej : edges_j) {
        const int i = ej.at("between")[0].get<int>() - 1;
        const int j = ej.at("between")[1].get<int>() - 1;
        const int e = [&] {
            auto lo = std::min(i, j), hi = std::max(i, j);
            for (std::size_t idx = 0; idx < out.network.edges.size(); ++idx)
                if (out.network.edges[idx] == std::make_pair(lo, hi)) return static_cast<int>(idx);
            return -1;
        }();
        const std::string ctx = "edge (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
        out.constraints.loss[e] = number_series(ej.at("loss"), T, origin, ctx + " loss");

        auto scatter_side = [&](const char* field, std::vector<Vec>& dest) {
            const auto& fj = ej.at(field);
            if (!fj.is_object()) fail(origin, ctx + " " + field + " must map ids to series");
            for (int endpoint : {i, j}) {
                const std::string key = std::to_string(endpoint + 1);
                if (!fj.contains(key))
                    fail(origin, ctx + " " + field + " is missing side `" + key + "`");
                Vec series = number_series(fj.at(key), T, origin, ctx + " " + field);
                const int peer = endpoint == i ? j : i;
                const int slot = out.network.neighbor_slot(endpoint, peer);
                const int deg = out.network.degree(endpoint);
                for (int t = 0; t < T; ++t) dest[endpoint][t * deg + slot] = series[t];
            }
        };
        scatter_side("a", out.costs.a);
        scatter_side("b_trade", out.costs.b_trade);
        scatter_side("b_fee", out.costs.b_fee);
        scatter_side("b_rep", out.costs.b_rep);
        scatter_side("c", out.costs.c);
    }

    const auto& bounds_j = doc.at("bounds");
    if (!bounds_j.is_array() || static_cast<int>(bounds_j.size()) != m)
        fail(origin, "`bounds` must have one entry per prosumer, in id order");
    out.constraints.sum_min.resize(m);
    out.constraints.sum_max.resize(m);
    for (int i = 0; i < m; ++i) {
        const std::string ctx = "bounds of prosumer " + std::to_string(i + 1);
        out.constraints.sum_min[i] = number_series(bounds_j[i].at("min"), T, origin, ctx + " min");
        out.constraints.sum_max[i] = number_series(bounds_j[i].at("max"), T, origin, ctx + " max");
    }
    return out;
}

json parse_json_or_fail(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(origin, e.what());  // carries byte offset context
    }
}

}  // namespace

ProblemInstance parse_scenario(const std::string& json_text, const std::string& origin) {
    const json doc = parse_json_or_fail(json_text, origin);
    auto parts = parse_document(doc, origin);
    return build_instance(std::move(parts.network), parts.horizon, std::move(parts.roles),
                          std::move(parts.costs), std::move(parts.constraints));
}

ProblemInstance load_scenario(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ScenarioParseError(path + ": cannot open file");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_scenario(ss.str(), path);
}

std::vector<std::string> validate_scenario_file(const std::string& path) {
    std::vector<std::string> diagnostics;
    std::ifstream is(path, std::ios::binary);
    if (!is) return {path + ": cannot open file"};
    std::ostringstream ss;
    ss << is.rdbuf();
    try {
        const json doc = parse_json_or_fail(ss.str(), path);
        auto parts = parse_document(doc, path);
        return validate_components(parts.network, parts.horizon, parts.roles, parts.costs,
                                   parts.constraints);
    } catch (const std::exception& e) {
        diagnostics.push_back(e.what());
    }
    return diagnostics;
}

SimConfigFile parse_sim_config(const std::string& json_text, int prosumer_count) {
    const json doc = parse_json_or_fail(json_text, "sim config");
    SimConfigFile out;
    if (doc.contains("seed")) out.sim.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("activation_rates"))
        out.sim.activation = ActivationModel::from_rates(doc.at("activation_rates").get<Vec>());
    else
        out.sim.activation = ActivationModel::uniform(prosumer_count);
    if (doc.contains("delay")) {
        const auto& dj = doc.at("delay");
        const std::string mode = dj.value("mode", "uniform");
        if (mode == "fixed")
            out.sim.delay.mode = DelayModel::Mode::fixed;
        else if (mode == "uniform")
            out.sim.delay.mode = DelayModel::Mode::uniform_random;
        else if (mode == "sweep")
            out.sim.delay.mode = DelayModel::Mode::sweep_snapshot;
        else
            throw ScenarioParseError("sim config: unknown delay mode `" + mode + "`");
        out.sim.delay.bound = dj.value("d", 0);
    }
    if (doc.contains("theta")) out.sim.theta = doc.at("theta").get<double>();
    if (doc.contains("timing")) {
        const auto& tj = doc.at("timing");
        if (tj.contains("compute_ms")) {
            if (tj.at("compute_ms").is_number())
                out.sim.timing.compute_ms.assign(prosumer_count, tj.at("compute_ms").get<double>());
            else
                out.sim.timing.compute_ms = tj.at("compute_ms").get<Vec>();
        }
        out.sim.timing.compute_jitter_ms = tj.value("compute_jitter_ms", 0.0);
        out.sim.timing.latency_ms = tj.value("latency_ms", 0.0);
        out.sim.timing.latency_jitter_ms = tj.value("latency_jitter_ms", 0.0);
    }
    if (doc.contains("stop")) {
        const auto& sj = doc.at("stop");
        out.stop.tol = sj.value("tol", out.stop.tol);
        out.stop.max_ticks = sj.value("max_ticks", out.stop.max_ticks);
    }
    return out;
}

SimConfigFile load_sim_config(const std::string& path, int prosumer_count) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ScenarioParseError(path + ": cannot open file");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_sim_config(ss.str(), prosumer_count);
}

}  // namespace p2pem
