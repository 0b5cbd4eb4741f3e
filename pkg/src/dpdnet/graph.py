"""Communication graphs: static construction, time-varying sampling plans,
and the spectral/incidence quantities the solvers consume.

Nodes are 0-indexed internally; the edge-list text format is 1-indexed.
Undirected edges are stored as (i, j) with i < j.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Graph",
    "TimeVaryingGraphPlan",
    "GraphDisconnectedError",
    "small_world",
    "sample_sequence",
    "incidence",
    "laplacian",
    "lambda2",
    "twelve_node_digraph",
    "save_graph",
    "load_graph",
]


class GraphDisconnectedError(ValueError):
    """Raised when an operation requires a connected graph."""


@dataclass(frozen=True)
class Graph:
    """Simple graph on nodes 0..node_count-1 with an explicit edge list."""

    node_count: int
    edges: tuple[tuple[int, int], ...]
    directed: bool = False

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        object.__setattr__(self, "edges", edges)
        seen = set()
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop ({i},{j}) not allowed")
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise ValueError(f"edge ({i},{j}) out of range")
            if not self.directed and i >= j:
                raise ValueError(f"undirected edge ({i},{j}) must satisfy i < j")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            seen.add((i, j))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> list[int]:
        """Undirected neighbor set of node i."""
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(set(out))

    def in_neighbors(self, i: int) -> list[int]:
        """Directed in-neighborhood including i itself."""
        out = {i}
        for a, b in self.edges:
            if b == i:
                out.add(a)
        return sorted(out)

    def out_neighbors(self, i: int) -> list[int]:
        """Directed out-neighborhood including i itself."""
        out = {i}
        for a, b in self.edges:
            if a == i:
                out.add(b)
        return sorted(out)

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def out_degree(self, i: int) -> int:
        """Number of distinct out-neighbors excluding self."""
        return len(self.out_neighbors(i)) - 1

    @property
    def max_degree(self) -> int:
        return max(self.degree(i) for i in range(self.node_count))

    def adjacency_lists(self) -> list[list[int]]:
        return [self.neighbors(i) for i in range(self.node_count)]

    def is_connected(self) -> bool:
        """BFS connectivity over the undirected skeleton."""
        if self.node_count == 1:
            return True
        adj = self.adjacency_lists()
        seen = [False] * self.node_count
        q = deque([0])
        seen[0] = True
        while q:
            u = q.popleft()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    q.append(v)
        return all(seen)

    def is_strongly_connected(self) -> bool:
        if not self.directed:
            return self.is_connected()

        def reach(succ):
            seen = [False] * self.node_count
            q = deque([0])
            seen[0] = True
            while q:
                u = q.popleft()
                for v in succ[u]:
                    if not seen[v]:
                        seen[v] = True
                        q.append(v)
            return all(seen)

        fwd = [[] for _ in range(self.node_count)]
        bwd = [[] for _ in range(self.node_count)]
        for a, b in self.edges:
            fwd[a].append(b)
            bwd[b].append(a)
        return reach(fwd) and reach(bwd)


@dataclass(frozen=True)
class TimeVaryingGraphPlan:
    """Recipe for the random graph sequence: per window of ``window_length``
    slots, the first slots sample ceil(sample_fraction * |E|) base edges
    uniformly without replacement and the last slot carries the edges not yet
    covered, so every window union equals the base edge set.

    With ``base_at_zero`` (default), slot t=0 is the base graph itself and the
    window scheme applies from t=1 on.
    """

    base: Graph
    window_length: int
    sample_fraction: float
    seed: int
    base_at_zero: bool = True

    def __post_init__(self):
        if self.window_length < 1:
            raise ValueError("window_length must be positive")
        if not (0.0 < self.sample_fraction <= 1.0):
            raise ValueError("sample_fraction must be in (0, 1]")

    @property
    def edges_per_slot(self) -> int:
        return int(np.ceil(self.sample_fraction * self.base.edge_count))


def small_world(node_count: int, edge_count: int, seed: int) -> Graph:
    """Random small-world graph: a random Hamiltonian cycle plus
    (edge_count - node_count) distinct extra edges sampled uniformly.

    Connected by construction. Extra edges never duplicate cycle edges.
    """
    if node_count < 3:
        raise ValueError("need at least 3 nodes")
    if edge_count < node_count:
        raise ValueError("edge_count must cover the cycle (>= node_count)")
    max_edges = node_count * (node_count - 1) // 2
    if edge_count > max_edges:
        raise ValueError(f"edge_count exceeds C(n,2) = {max_edges}")

    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5357]))
    order = rng.permutation(node_count)
    cycle = set()
    for k in range(node_count):
        a, b = int(order[k]), int(order[(k + 1) % node_count])
        cycle.add((min(a, b), max(a, b)))

    pool = [
        (i, j)
        for i in range(node_count)
        for j in range(i + 1, node_count)
        if (i, j) not in cycle
    ]
    extra = edge_count - len(cycle)
    idx = rng.choice(len(pool), size=extra, replace=False) if extra > 0 else []
    edges = sorted(cycle | {pool[int(t)] for t in idx})
    return Graph(node_count, tuple(edges), directed=False)


@lru_cache(maxsize=2048)
def _window_draws(seed: int, window: int, slots: int, n_edges: int,
                  k: int) -> tuple[tuple[int, ...], ...]:
    """Sampled edge indices for the first ``slots`` positions of a window,
    one generator per (seed, window)."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, window]))
    return tuple(
        tuple(int(i) for i in rng.choice(n_edges, size=k, replace=False))
        for _ in range(slots)
    )


def _window_slot_indices(plan: TimeVaryingGraphPlan, t: int) -> np.ndarray:
    """Base-edge indices of slot t of the windowed scheme."""
    m = plan.window_length
    window, pos = divmod(t, m)
    n_edges = plan.base.edge_count
    draws = _window_draws(int(plan.seed), window, m - 1, n_edges,
                          plan.edges_per_slot)
    if pos < m - 1:
        return np.array(sorted(draws[pos]), dtype=int)
    covered = set()
    for d in draws:
        covered.update(d)
    return np.array(sorted(set(range(n_edges)) - covered), dtype=int)


def sample_edge_indices(plan: TimeVaryingGraphPlan, t: int) -> np.ndarray:
    """Indices into plan.base.edges of the graph at time t, deterministic in
    (plan, t)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if plan.base_at_zero:
        if t == 0:
            return np.arange(plan.base.edge_count)
        return _window_slot_indices(plan, t - 1)
    return _window_slot_indices(plan, t)


def sample_sequence(plan: TimeVaryingGraphPlan, t: int) -> Graph:
    """Graph at time t, deterministic in (plan, t)."""
    idx = sample_edge_indices(plan, t)
    edges = tuple(plan.base.edges[int(i)] for i in idx)
    return Graph(plan.base.node_count, edges, directed=plan.base.directed)


def incidence(graph: Graph) -> np.ndarray:
    """Oriented edge-node incidence matrix: row per edge (i,j) with +1 at i
    and -1 at j."""
    if graph.directed:
        raise ValueError("incidence is defined for undirected graphs")
    h = np.zeros((graph.edge_count, graph.node_count))
    for row, (i, j) in enumerate(graph.edges):
        h[row, i] = 1.0
        h[row, j] = -1.0
    return h


def laplacian(graph: Graph) -> np.ndarray:
    """Unweighted graph Laplacian: degree on the diagonal, -1 per edge."""
    if graph.directed:
        raise ValueError("laplacian is defined for undirected graphs")
    n = graph.node_count
    omega = np.zeros((n, n))
    for i, j in graph.edges:
        omega[i, j] = omega[j, i] = -1.0
        omega[i, i] += 1.0
        omega[j, j] += 1.0
    return omega


def lambda2(psd_matrix: np.ndarray, rel_tol: float = 1e-9) -> float:
    """Smallest strictly positive eigenvalue of a symmetric PSD matrix with a
    one-dimensional kernel (a connected graph's Laplacian).

    Eigenvalues below ``rel_tol`` times the largest one count as zero; more
    than one numerical zero signals a disconnected graph.
    """
    vals = np.linalg.eigvalsh(np.asarray(psd_matrix, dtype=float))
    scale = max(vals[-1], 1.0)
    positive = vals[vals > rel_tol * scale]
    if len(positive) < len(vals) - 1:
        raise GraphDisconnectedError(
            "disconnected: zero eigenvalue has multiplicity "
            f"{len(vals) - len(positive)}"
        )
    if len(positive) == 0:
        raise GraphDisconnectedError("disconnected: matrix is zero")
    return float(positive[0])


_TWELVE_NODE_EDGES_1IDX = (
    (1, 10), (1, 6), (8, 1), (8, 10), (8, 6), (6, 8), (6, 3), (11, 1),
    (9, 11), (9, 3), (9, 5), (4, 9), (4, 11), (7, 4), (7, 12), (7, 6),
    (2, 10), (12, 6), (12, 2), (12, 5), (3, 12), (5, 3), (10, 7), (10, 5),
)


def twelve_node_digraph() -> Graph:
    """Built-in strongly connected digraph with 12 nodes and 24 directed
    edges, used by the directed-network experiments."""
    edges = tuple((i - 1, j - 1) for i, j in _TWELVE_NODE_EDGES_1IDX)
    return Graph(12, edges, directed=True)


def save_graph(graph: Graph, path) -> None:
    """Write the edge-list text format: 'N E directed' then 1-indexed pairs."""
    lines = [f"{graph.node_count} {graph.edge_count} {int(graph.directed)}"]
    lines += [f"{i + 1} {j + 1}" for i, j in graph.edges]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path) -> Graph:
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 3:
        raise ValueError("malformed graph file")
    n, e, directed = int(tokens[0]), int(tokens[1]), bool(int(tokens[2]))
    flat = tokens[3:]
    if len(flat) != 2 * e:
        raise ValueError(f"expected {e} edges, found {len(flat) // 2}")
    edges = tuple(
        (int(flat[2 * k]) - 1, int(flat[2 * k + 1]) - 1) for k in range(e)
    )
    return Graph(n, edges, directed=directed)
