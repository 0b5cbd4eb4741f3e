import numpy as np
import pytest

from dpdnet.graph import Graph
from dpdnet.metrics import (
    CSV_COLUMNS,
    RunTrace,
    TraceRecord,
    consensus_violation,
    infeasibility,
    rate_fit,
    read_trace_csv,
    relative_error,
    theorem_gap,
    write_trace_csv,
)
from dpdnet.problems import gen_classo_instance, gen_ellipsoid_instance


def test_relative_error_values():
    x_star = np.array([3.0, 4.0])
    blocks = np.tile(x_star, (4, 1))
    assert relative_error(blocks, x_star) == 0.0
    blocks[2] = 2 * x_star
    assert relative_error(blocks, x_star) == pytest.approx(1.0)


def test_relative_error_matches_loop():
    rng = np.random.default_rng(0)
    x_star = rng.standard_normal(6)
    blocks = rng.standard_normal((5, 6))
    direct = max(
        np.linalg.norm(blocks[i] - x_star) for i in range(5)
    ) / np.linalg.norm(x_star)
    assert relative_error(blocks, x_star) == pytest.approx(direct)


def test_relative_error_rejects_zero_reference():
    with pytest.raises(ValueError):
        relative_error(np.zeros((2, 3)), np.zeros(3))


def test_infeasibility_orthant_positive_part():
    inst = gen_classo_instance(12, 14, 3, 0.05, seed=1)
    x_feas = np.tile(np.linspace(-1.0, 1.0, 12), (3, 1))  # ascending
    assert infeasibility(x_feas, inst) == 0.0
    x_bad = x_feas.copy()
    x_bad[1] = x_bad[1][::-1]
    direct = max(
        np.linalg.norm(np.maximum(a.g_value(x_bad[i]), 0.0))
        for i, a in enumerate(inst.agents)
    )
    assert infeasibility(x_bad, inst) == pytest.approx(direct)


def test_infeasibility_matches_distance_on_random_points():
    inst = gen_ellipsoid_instance(6, 4, 2.0, seed=2)
    rng = np.random.default_rng(3)
    from dpdnet.cones_prox import distance_to_cone

    for _ in range(1000):
        x = rng.uniform(-2, 2, (4, 6))
        direct = max(
            distance_to_cone(a.cone, a.g_value(x[i]))
            for i, a in enumerate(inst.agents)
        )
        assert infeasibility(x, inst) == pytest.approx(direct, abs=1e-12)


def test_consensus_violation_modes():
    graph = Graph(3, ((0, 1), (1, 2)))
    x = np.array([[1.0], [1.0], [1.0]])
    assert consensus_violation(x, graph) == 0.0
    assert consensus_violation(x, None) == 0.0
    y = np.array([[1.0], [2.0], [4.0]])
    assert consensus_violation(y, graph) == pytest.approx(np.sqrt(1 + 4))


def test_theorem_gap_zero_at_solution():
    inst = gen_classo_instance(12, 14, 3, 0.05, seed=4)
    x_star = np.linspace(-1.0, 1.0, 12)
    blocks = np.tile(x_star, (3, 1))
    phi_star = inst.varphi_stacked(blocks)
    theta = [np.zeros(11)] * 3
    assert theorem_gap(blocks, inst, theta, 0.0, None, phi_star) <= 1e-12


def test_theorem_gap_theta_zero_reduces_to_consensus():
    inst = gen_classo_instance(12, 14, 2, 0.05, seed=4)
    rng = np.random.default_rng(1)
    blocks = np.tile(np.linspace(-1.0, 1.0, 12), (2, 1))
    blocks[1] += 0.1  # still ascending, so feasible, but off consensus
    phi = inst.varphi_stacked(blocks)
    theta = [np.zeros(11)] * 2
    gap = theorem_gap(blocks, inst, theta, 0.0, None, phi)
    assert gap == pytest.approx(consensus_violation(blocks, None))


def synthetic_trace(fn):
    trace = RunTrace()
    for k in range(1, 301):
        trace.append(TraceRecord(k=k, t_k=k, values={"m": fn(k)}))
    return trace


def test_rate_fit_exact_power_law():
    trace = synthetic_trace(lambda k: k ** -2.0)
    assert rate_fit(trace, "m", (10, 300)) == pytest.approx(-2.0, abs=1e-6)


def test_rate_fit_constant_metric():
    trace = synthetic_trace(lambda k: 3.7)
    assert rate_fit(trace, "m", (10, 300)) == pytest.approx(0.0, abs=1e-9)


def test_rate_fit_default_range_drops_transient():
    trace = synthetic_trace(lambda k: k ** -1.0 if k > 25 else 1e6)
    slope = rate_fit(trace, "m")
    assert slope == pytest.approx(-1.0, abs=1e-6)


def test_rate_fit_errors():
    trace = synthetic_trace(lambda k: -1.0)
    with pytest.raises(ValueError):
        rate_fit(trace, "m", (10, 300))
    short = RunTrace()
    for k in range(1, 6):
        short.append(TraceRecord(k=k, t_k=k, values={"m": 1.0}))
    with pytest.raises(ValueError):
        rate_fit(short, "m", (1, 5))


def test_trace_monotonicity_enforced():
    trace = RunTrace()
    trace.append(TraceRecord(k=5, t_k=10))
    with pytest.raises(ValueError):
        trace.append(TraceRecord(k=5, t_k=11))
    with pytest.raises(ValueError):
        trace.append(TraceRecord(k=6, t_k=9))


def test_csv_roundtrip(tmp_path):
    trace = RunTrace()
    trace.append(TraceRecord(k=1, t_k=4, values={
        "rel_err_last": 1.0 / 3.0, "gamma": 0.25, "e1": 1e-17,
    }))
    trace.append(TraceRecord(k=2, t_k=8, values={
        "rel_err_last": 0.1234567890123456789, "gamma": 0.5,
    }))
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, path)
    header = path.read_text().splitlines()[0].split(",")
    assert header == CSV_COLUMNS
    loaded = read_trace_csv(path)
    assert loaded.records[0].values["rel_err_last"] == 1.0 / 3.0
    assert loaded.records[1].values["rel_err_last"] == pytest.approx(
        0.1234567890123457, rel=1e-16
    )
    assert "e1" not in loaded.records[1].values
    row1 = path.read_text().splitlines()[1].split(",")
    assert row1[CSV_COLUMNS.index("rel_err_last")] == "0.33333333333333331"
