"""Decentralized dynamic P2P energy trading solvers.

Synchronous and asynchronous primal-dual operator-splitting solvers for
dynamic peer-to-peer energy management, plus a deterministic discrete-event
simulator for bounded communication delays.  The heavy lifting lives in the
C++ extension module; this package re-exports its surface.
"""

from ._core import (
    ProblemInstance,
    SolverState,
    StepConfig,
    bound_suite,
    default_steps,
    edge_prox,
    kkt_residual,
    load_scenario,
    parse_scenario,
    project_feasible,
    run_asyn,
    run_syn,
    smoothness_constants,
    solve_reference,
    theta_bound,
    validate_scenario_file,
)

__all__ = [
    "ProblemInstance",
    "SolverState",
    "StepConfig",
    "bound_suite",
    "default_steps",
    "edge_prox",
    "kkt_residual",
    "load_scenario",
    "parse_scenario",
    "project_feasible",
    "run_asyn",
    "run_syn",
    "smoothness_constants",
    "solve_reference",
    "theta_bound",
    "validate_scenario_file",
]
