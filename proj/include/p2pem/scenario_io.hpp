#ifndef P2PEM_SCENARIO_IO_HPP
#define P2PEM_SCENARIO_IO_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "p2pem/async_sim.hpp"
#include "p2pem/problem.hpp"

namespace p2pem {

struct ScenarioParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/* Loads a scenario document (see scenarios/scenario.schema.json) and
 * builds the instance.  Prosumer ids are 1-based in the file, 0-based in
 * memory.  Throws ScenarioParseError with field context on malformed
 * input and std::invalid_argument on invariant violations. */
ProblemInstance load_scenario(const std::string& path);
ProblemInstance parse_scenario(const std::string& json_text, const std::string& origin = "<string>");

/* Structural and invariant diagnostics without throwing; empty means valid. */
std::vector<std::string> validate_scenario_file(const std::string& path);

/* Simulation config document: keys `seed`, `activation_rates`,
 * `delay: {mode, d}`, `theta`, `timing: {compute_ms, latency_ms}`,
 * `stop: {tol, max_ticks}`.  Missing keys keep defaults. */
struct SimConfigFile {
    SimConfig sim;
    AsyncStopRule stop;
};
SimConfigFile load_sim_config(const std::string& path, int prosumer_count);
SimConfigFile parse_sim_config(const std::string& json_text, int prosumer_count);

}  // namespace p2pem

#endif
