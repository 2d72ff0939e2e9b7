import json
import math
import os

import pytest

p2pem = pytest.importorskip("p2pem")

SCENARIOS = os.environ.get("P2PEM_SCENARIO_DIR", "scenarios")


def scenario(name):
    return os.path.join(SCENARIOS, name)


def test_load_and_validate():
    inst = p2pem.load_scenario(scenario("six_prosumer.json"))
    assert inst.prosumer_count == 6
    assert inst.horizon == 4
    assert inst.edge_count == 8
    assert p2pem.validate_scenario_file(scenario("six_prosumer.json")) == []


def test_cost_and_gradient():
    inst = p2pem.load_scenario(scenario("two_prosumer.json"))
    assert inst.cost_value(0, [0.0]) == 0.0
    # d/dp (p^2 - 4p) at p=1 is -2
    assert inst.cost_gradient(0, [1.0]) == pytest.approx([-2.0])


def test_projection():
    assert p2pem.project_feasible("seller", 0.0, 5.0, [3.0, -1.0]) == pytest.approx([3.0, 0.0])
    got = p2pem.project_feasible("seller", 0.0, 2.0, [3.0, 1.0])
    assert got == pytest.approx([2.0, 0.0], abs=1e-9)


def test_sync_run_hits_analytic_optimum():
    inst = p2pem.load_scenario(scenario("two_prosumer.json"))
    steps = p2pem.default_steps(inst, sigma=0.99)
    out = p2pem.run_syn(inst, steps, tol=1e-10, max_iter=5000)
    assert out["converged"]
    assert out["p"][0][0] == pytest.approx(1.0, abs=1e-8)
    assert out["p"][1][0] == pytest.approx(-1.0, abs=1e-8)
    # residual columns are present and consistent
    assert len(out["report"]["coupling"]) == out["iterations"] + 1


def test_oracle_and_bounds():
    inst = p2pem.load_scenario(scenario("two_prosumer.json"))
    sol = p2pem.solve_reference(inst)
    assert sol["p_star"][0][0] == pytest.approx(1.0, abs=1e-8)
    assert sol["kkt_stationarity"] <= 1e-8

    steps = p2pem.default_steps(inst, sigma=0.95)
    rep = p2pem.bound_suite(inst, steps)
    assert rep["sync_ok"]
    assert rep["min_eig_fejer_metric"] > 0


def test_async_run_is_seeded_and_converges():
    inst = p2pem.load_scenario(scenario("six_prosumer.json"))
    steps = p2pem.default_steps(inst, sigma=0.95, regime="async")
    a = p2pem.run_asyn(inst, steps, seed=3, delay_bound=10, tol=1e-5)
    b = p2pem.run_asyn(inst, steps, seed=3, delay_bound=10, tol=1e-5)
    assert a["converged"] and b["converged"]
    assert a["ticks"] == b["ticks"]
    assert a["p"] == b["p"]

    ref = p2pem.solve_reference(inst)
    worst = max(
        abs(x - y)
        for pi, ri in zip(a["p"], ref["p_star"])
        for x, y in zip(pi, ri)
    )
    assert worst <= 1e-4

    bound = p2pem.theta_bound(inst, steps, delay_bound=10)
    assert 0 < a["theta"] <= bound
    assert 0 < bound < 1


def test_smoothness_constants():
    inst = p2pem.load_scenario(scenario("two_prosumer.json"))
    sc = p2pem.smoothness_constants(inst)
    assert sc["lipschitz"] == pytest.approx(4.0)  # 2 * max a with a in {1, 2}
    assert sc["strong_convexity"] == pytest.approx(2.0)
    assert sc["condition_number"] == pytest.approx(2.0)
