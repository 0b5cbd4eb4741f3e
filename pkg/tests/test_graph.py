import numpy as np
import pytest

from dpdnet.graph import (
    Graph,
    GraphDisconnectedError,
    TimeVaryingGraphPlan,
    incidence,
    lambda2,
    laplacian,
    load_graph,
    sample_sequence,
    save_graph,
    small_world,
    twelve_node_digraph,
)


def test_graph_rejects_self_loops_and_duplicates():
    with pytest.raises(ValueError):
        Graph(3, ((0, 0),))
    with pytest.raises(ValueError):
        Graph(3, ((0, 1), (0, 1)))
    with pytest.raises(ValueError):
        Graph(3, ((1, 0),))  # undirected pairs are stored i < j


def test_small_world_paper_scale():
    g = small_world(12, 24, seed=7)
    assert g.node_count == 12
    assert g.edge_count == 24
    assert g.is_connected()


def test_small_world_triangle_is_cycle():
    g = small_world(3, 3, seed=1)
    assert sorted(g.edges) == [(0, 1), (0, 2), (1, 2)]


def test_small_world_full_budget_is_complete():
    g = small_world(10, 45, seed=3)
    expected = {(i, j) for i in range(10) for j in range(i + 1, 10)}
    assert set(g.edges) == expected


def test_small_world_connected_many_seeds():
    for seed in range(25):
        assert small_world(9, 12, seed).is_connected()


def test_small_world_bounds():
    with pytest.raises(ValueError):
        small_world(5, 4, 0)
    with pytest.raises(ValueError):
        small_world(5, 11, 0)


def _plan(seed=11, p=0.8, m=5, base_at_zero=False):
    return TimeVaryingGraphPlan(
        base=small_world(12, 24, seed=5),
        window_length=m,
        sample_fraction=p,
        seed=seed,
        base_at_zero=base_at_zero,
    )


def test_sample_sequence_slot_sizes():
    plan = _plan()
    for t in range(4):
        assert sample_sequence(plan, t).edge_count == 20  # ceil(0.8 * 24)


def test_sample_sequence_window_union_covers_base():
    plan = _plan()
    for window in range(50):
        union = set()
        for pos in range(5):
            union.update(sample_sequence(plan, 5 * window + pos).edges)
        assert union == set(plan.base.edges)


def test_sample_sequence_full_fraction():
    plan = _plan(p=1.0)
    for t in range(9):
        g = sample_sequence(plan, t)
        if t % 5 == 4:
            assert g.edge_count == 0  # remainder slot after full coverage
        else:
            assert set(g.edges) == set(plan.base.edges)


def test_sample_sequence_deterministic():
    a = _plan(seed=42)
    b = _plan(seed=42)
    for t in [0, 3, 17, 104]:
        assert sample_sequence(a, t).edges == sample_sequence(b, t).edges


def test_sample_sequence_base_at_zero():
    plan = _plan(base_at_zero=True)
    assert sample_sequence(plan, 0).edges == plan.base.edges
    shifted = _plan(base_at_zero=False)
    assert sample_sequence(plan, 1).edges == sample_sequence(shifted, 0).edges


def test_incidence_single_edge():
    g = Graph(2, ((0, 1),))
    np.testing.assert_array_equal(incidence(g), [[1.0, -1.0]])


def test_incidence_transpose_identity():
    for seed in range(100):
        g = small_world(7, 12, seed)
        h = incidence(g)
        np.testing.assert_allclose(h.T @ h, laplacian(g), atol=1e-12)


def test_incidence_triangle():
    g = Graph(3, ((0, 1), (0, 2), (1, 2)))
    h = incidence(g)
    expected = 2.0 * np.eye(3) - (np.ones((3, 3)) - np.eye(3))
    np.testing.assert_allclose(h.T @ h, expected, atol=1e-12)


def test_incidence_rejects_directed():
    with pytest.raises(ValueError):
        incidence(Graph(2, ((0, 1),), directed=True))


def test_laplacian_path2():
    g = Graph(2, ((0, 1),))
    np.testing.assert_array_equal(laplacian(g), [[1, -1], [-1, 1]])


def test_laplacian_complete3():
    g = Graph(3, ((0, 1), (0, 2), (1, 2)))
    omega = laplacian(g)
    np.testing.assert_array_equal(np.diag(omega), [2, 2, 2])
    assert omega[0, 1] == -1
    np.testing.assert_allclose(omega.sum(axis=1), 0, atol=1e-15)


def test_lambda2_values():
    k3 = Graph(3, ((0, 1), (0, 2), (1, 2)))
    assert lambda2(laplacian(k3)) == pytest.approx(3.0, abs=1e-12)
    path2 = Graph(2, ((0, 1),))
    assert lambda2(laplacian(path2)) == pytest.approx(2.0, abs=1e-12)


def test_lambda2_disconnected():
    block = np.zeros((4, 4))
    block[:2, :2] = [[1, -1], [-1, 1]]
    block[2:, 2:] = [[1, -1], [-1, 1]]
    with pytest.raises(GraphDisconnectedError):
        lambda2(block)


def test_twelve_node_digraph():
    g = twelve_node_digraph()
    assert g.node_count == 12
    assert g.edge_count == 24
    assert g.directed
    assert g.is_strongly_connected()


def test_graph_roundtrip(tmp_path):
    g = small_world(8, 14, seed=2)
    path = tmp_path / "g.txt"
    save_graph(g, path)
    loaded = load_graph(path)
    assert loaded.edges == g.edges
    assert loaded.node_count == 8
    assert not loaded.directed
    assert path.read_text().splitlines()[0] == "8 14 0"


def test_directed_neighborhoods():
    g = Graph(3, ((0, 1), (1, 2), (2, 0)), directed=True)
    assert g.out_neighbors(0) == [0, 1]
    assert g.in_neighbors(0) == [0, 2]
    assert g.out_degree(0) == 1
