import math
import random

import pytest

import moneygas

BASE = {
    "schema_version": 1,
    "simulation": {
        "agents": 200,
        "initial_balance": 100,
        "rule": {"type": "uniform_random"},
        "boundary": {"type": "no_debt"},
        "sweeps": 500,
        "seed": 5,
        "snapshot_every": 50,
        "bin_width": 10,
    },
    "experiment": {"average_last": 5},
}


def test_canonical_config_and_hash():
    canon = moneygas.canonical_config(BASE)
    assert canon["experiment"]["replicates"] == 1
    assert canon["simulation"]["money"] == "real"
    h = moneygas.config_hash(BASE)
    assert len(h) == 16
    assert moneygas.config_hash(canon) == h


def test_config_error_names_the_field():
    bad = dict(BASE, simulation=dict(BASE["simulation"], agents=-1))
    with pytest.raises(moneygas.ConfigError, match="/simulation/agents"):
        moneygas.canonical_config(bad)


def test_simulation_conserves_money():
    sim = moneygas.Simulation(BASE)
    assert sim.total_money == pytest.approx(200 * 100)
    sim.run(100)
    assert sim.sweeps_done == 100
    assert min(sim.balances) >= 0.0
    assert sum(sim.balances) == pytest.approx(200 * 100, rel=1e-12)
    assert abs(sim.conservation_residual) < 1e-9
    assert sim.loans_outstanding == 0.0


def test_run_point_is_deterministic():
    a = moneygas.run_point(BASE)
    b = moneygas.run_point(BASE)
    assert a["metrics"] == b["metrics"]
    assert a["metrics"]["mean"] == pytest.approx(100.0)
    assert "exponential" in a["fits"]
    assert sum(a["counts"]) == 5 * 200


def test_fits_on_synthetic_data():
    rng = random.Random(3)
    xs = [rng.expovariate(1 / 50.0) for _ in range(20000)]
    fit = moneygas.fit_exponential(xs)
    assert fit["temperature"] == pytest.approx(50.0, rel=0.03)
    pareto = [rng.paretovariate(1.5) for _ in range(20000)]
    hill = moneygas.tail_exponent_hill(pareto, 0.05)
    assert hill["alpha"] == pytest.approx(1.5, rel=0.1)
    with pytest.raises(moneygas.FitError):
        moneygas.fit_exponential([1.0])
    assert moneygas.ks_two_sample(xs[:10000], xs[10000:]) < 0.03


def test_entropy_of_a_delta_is_zero():
    assert moneygas.entropy_per_agent([5.0] * 10, 1.0) == 0.0
    assert moneygas.entropy_per_agent([0.5, 1.5], 1.0) == pytest.approx(math.log(2))


def test_oracle():
    exact = moneygas.enumerate_oracle(2, 2)
    assert exact["states"] == 3
    assert exact["marginal"] == pytest.approx([1 / 3, 1 / 3, 1 / 3])
    rep = moneygas.oracle_check(3, 4, mc_sweeps=20000)
    assert rep["pass"]


def test_kinetic_fixed_kernel():
    out = moneygas.kinetic_stationary("fixed", 1, points=200, initial_index=10, tolerance=1e-9)
    assert out["converged"]
    assert out["symmetric"]
    assert sum(out["P"]) == pytest.approx(1.0)
    mean = sum(m * p for m, p in zip(out["m"], out["P"]))
    assert mean == pytest.approx(10.0, rel=1e-8)
    prop = moneygas.kinetic_stationary("proportional", 1 / 3, points=200, initial_index=10)
    assert not prop["symmetric"]
