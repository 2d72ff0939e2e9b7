#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "support/fixtures.hpp"

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
    const std::string cmd = std::string(P2PEM_CLI_PATH) + " " + args + " > cli_stdout.txt 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string scenario(const char* name) { return p2pem::testing::scenario_path(name); }

}  // namespace

TEST_CASE("validate mode: shipped scenario passes, broken input fails with status 2") {
    CHECK(run_cli("--scenario " + scenario("six_prosumer.json") + " --mode validate") == 0);

    std::ofstream bad("cli_bad_scenario.json");
    bad << R"({"prosumers": 2, "horizon": 1, "roles": [[1]], "bounds": [], "edges": []})";
    bad.close();
    CHECK(run_cli("--scenario cli_bad_scenario.json --mode validate") == 2);

    std::ofstream worse("cli_unparsable.json");
    worse << "{ nope";
    worse.close();
    CHECK(run_cli("--scenario cli_unparsable.json --mode validate") == 2);
    fs::remove("cli_bad_scenario.json");
    fs::remove("cli_unparsable.json");
}

TEST_CASE("syn mode on the two-prosumer scenario lands on the analytic optimum") {
    CHECK(run_cli("--scenario " + scenario("two_prosumer.json") +
                  " --mode syn --tol 1e-10 --out cli_two") == 0);
    const std::string csv = slurp("cli_two.csv");
    CHECK(csv.rfind("k,dist_ts,coupling,stationarity,fejer_slack,messages,sim_time_ms\n", 0) ==
          0);
    const std::string summary = slurp("cli_two.summary.json");
    CHECK(summary.find("\"converged\": true") != std::string::npos);
    // the reference objective 3 p^2 - 6 p at p = 1
    const auto pos = summary.find("\"objective\": ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::abs(std::stod(summary.substr(pos + 13)) + 3.0) <= 1e-9);
    fs::remove("cli_two.csv");
    fs::remove("cli_two.summary.json");
}

TEST_CASE("asyn mode reproduces its trace byte for byte under one seed") {
    const std::string base = "--scenario " + scenario("six_prosumer.json") +
                             " --mode asyn --delay-bound 5 --tol 1e-6";
    CHECK(run_cli(base + " --seed 11 --out cli_a") == 0);
    CHECK(run_cli(base + " --seed 11 --out cli_b") == 0);
    const std::string a = slurp("cli_a.csv");
    CHECK(!a.empty());
    CHECK(a == slurp("cli_b.csv"));

    CHECK(run_cli(base + " --seed 12 --out cli_c") == 0);
    CHECK(a != slurp("cli_c.csv"));
    for (const char* f : {"cli_a.csv", "cli_b.csv", "cli_c.csv", "cli_a.summary.json",
                          "cli_b.summary.json", "cli_c.summary.json"})
        fs::remove(f);
}

TEST_CASE("oracle mode writes a loadable cache") {
    CHECK(run_cli("--scenario " + scenario("two_prosumer.json") +
                  " --mode oracle --out cli_oracle.json") == 0);
    const std::string cache = slurp("cli_oracle.json");
    CHECK(cache.find("p_star") != std::string::npos);
    CHECK(cache.find("w_star") != std::string::npos);
    fs::remove("cli_oracle.json");
}

TEST_CASE("compare mode orders median ticks by delay bound") {
    CHECK(run_cli("--scenario " + scenario("six_prosumer.json") +
                  " --mode compare --seeds 3 --seed 5 --tol 1e-5 --out cli_cmp") == 0);
    const std::string summary = slurp("cli_cmp.summary.json");
    CHECK(summary.find("median_ticks") != std::string::npos);
    CHECK(summary.find("\"syn\"") != std::string::npos);
    CHECK(fs::exists("cli_cmp.asyn_d0.csv"));
    CHECK(fs::exists("cli_cmp.asyn_d10.csv"));
    CHECK(fs::exists("cli_cmp.asyn_d20.csv"));

    // the synchronous column is deterministic: a different base seed leaves
    // its trace byte-identical
    CHECK(run_cli("--scenario " + scenario("six_prosumer.json") +
                  " --mode compare --seeds 1 --seed 99 --tol 1e-5 --out cli_cmp2") == 0);
    CHECK(slurp("cli_cmp.syn.csv") == slurp("cli_cmp2.syn.csv"));
    for (const char* f :
         {"cli_cmp.syn.csv", "cli_cmp.asyn_d0.csv", "cli_cmp.asyn_d10.csv",
          "cli_cmp.asyn_d20.csv", "cli_cmp.summary.json", "cli_cmp2.syn.csv",
          "cli_cmp2.asyn_d0.csv", "cli_cmp2.asyn_d10.csv", "cli_cmp2.asyn_d20.csv",
          "cli_cmp2.summary.json"})
        fs::remove(f);
}

TEST_CASE("asyn mode accepts a simulation config document") {
    std::ofstream cfg("cli_sim_config.json");
    cfg << R"({"activation_rates": [1,1,1,2,2,2], "delay": {"mode": "fixed", "d": 4},
               "timing": {"compute_ms": [1,1,1,1,1,5], "latency_ms": 0.5},
               "stop": {"tol": 1e-5, "max_ticks": 500000}})";
    cfg.close();
    CHECK(run_cli("--scenario " + scenario("six_prosumer.json") +
                  " --mode asyn --config cli_sim_config.json --seed 2 --tol 1e-5"
                  " --out cli_cfg") == 0);
    const std::string summary = slurp("cli_cfg.summary.json");
    CHECK(summary.find("\"converged\": true") != std::string::npos);
    CHECK(summary.find("\"delay_bound\": 4") != std::string::npos);
    for (const char* f : {"cli_sim_config.json", "cli_cfg.csv", "cli_cfg.summary.json"})
        fs::remove(f);
}

TEST_CASE("divergent configuration exits with status 3 and names the bound") {
    const int code = run_cli("--scenario " + scenario("two_prosumer.json") +
                             " --mode syn --alpha 5.0 --tol 1e-10 --max-iter 5000" +
                             " --out cli_div");
    CHECK(code == 3);
    const std::string log = slurp("cli_stdout.txt");
    CHECK(log.find("exceeds the admissible bound") != std::string::npos);
    fs::remove("cli_div.csv");
    fs::remove("cli_div.summary.json");
}
