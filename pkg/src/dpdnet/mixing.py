"""One-round communication matrices and multi-round approximate averaging.

Undirected rounds use Metropolis weights (symmetric, doubly stochastic);
directed rounds use out-degree weights (column stochastic) combined through
the push-sum ratio protocol. The evaluators apply one matrix per round --
the dense multi-round product is only ever formed by test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .graph import Graph, TimeVaryingGraphPlan, sample_sequence

__all__ = [
    "MixingMatrix",
    "AveragingReport",
    "metropolis_weights",
    "directed_weights",
    "approx_average_undirected",
    "push_sum",
    "exact_average",
    "estimate_decay",
    "DegenerateWeightError",
    "NoDecayError",
]

STOCHASTIC_TOL = 1e-12


class DegenerateWeightError(ArithmeticError):
    """Push-sum weight collapsed below representable range."""


class NoDecayError(ValueError):
    """Residuals did not shrink with the number of rounds."""


@dataclass(frozen=True)
class MixingMatrix:
    """One communication round. kind 'metropolis' matrices are doubly
    stochastic and symmetric; 'directed_pushsum' matrices are column
    stochastic with strictly positive diagonal."""

    entries: np.ndarray
    kind: str

    def __post_init__(self):
        v = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", v)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("mixing matrix must be square")
        if v.min(initial=0.0) < -STOCHASTIC_TOL:
            raise ValueError("mixing matrix must be nonnegative")
        if self.kind == "metropolis":
            if abs(v - v.T).max(initial=0.0) > STOCHASTIC_TOL:
                raise ValueError("metropolis matrix must be symmetric")
            if abs(v.sum(axis=0) - 1.0).max(initial=0.0) > STOCHASTIC_TOL:
                raise ValueError("metropolis matrix must be doubly stochastic")
            if abs(v.sum(axis=1) - 1.0).max(initial=0.0) > STOCHASTIC_TOL:
                raise ValueError("metropolis matrix must be doubly stochastic")
        elif self.kind == "directed_pushsum":
            if abs(v.sum(axis=0) - 1.0).max(initial=0.0) > STOCHASTIC_TOL:
                raise ValueError("push-sum matrix must be column stochastic")
            if np.any(np.diag(v) <= 0.0):
                raise ValueError("push-sum matrix needs positive diagonal")
        else:
            raise ValueError(f"unknown mixing kind {self.kind!r}")

    @property
    def node_count(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class AveragingReport:
    """Diagnostic wrapper around one multi-round averaging evaluation."""

    output: np.ndarray
    rounds_used: int
    residual_vs_exact: float | None = None


def metropolis_weights(graph: Graph) -> MixingMatrix:
    """V_ij = 1/(max{d_i, d_j}+1) for neighbors, diagonal absorbs the rest."""
    if graph.directed:
        raise ValueError("metropolis weights need an undirected graph")
    n = graph.node_count
    deg = [graph.degree(i) for i in range(n)]
    v = np.zeros((n, n))
    for i, j in graph.edges:
        w = 1.0 / (max(deg[i], deg[j]) + 1.0)
        v[i, j] = v[j, i] = w
    np.fill_diagonal(v, 1.0 - v.sum(axis=1))
    return MixingMatrix(v, "metropolis")


def directed_weights(graph: Graph) -> MixingMatrix:
    """Column j carries 1/(d_j+1) at j and at every out-neighbor of j, where
    d_j is the out-degree (self excluded)."""
    if not graph.directed:
        raise ValueError("directed weights need a directed graph")
    n = graph.node_count
    v = np.zeros((n, n))
    for j in range(n):
        w = 1.0 / (graph.out_degree(j) + 1.0)
        for i in graph.out_neighbors(j):
            v[i, j] = w
    return MixingMatrix(v, "directed_pushsum")


def _as_blocks(omega: np.ndarray, node_count: int) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    flat = omega.reshape(-1)
    if flat.size % node_count != 0:
        raise ValueError(
            f"vector of size {flat.size} does not split into {node_count} blocks"
        )
    return flat.reshape(node_count, -1)


def approx_average_undirected(
    mixing_sequence: Sequence[MixingMatrix], omega: np.ndarray
) -> np.ndarray:
    """Apply the rounds V^{t+1}, ..., V^{t+q} in order to the stacked vector,
    one neighbor-weighted block average per round."""
    if not mixing_sequence:
        return np.asarray(omega, dtype=float).copy()
    n_nodes = mixing_sequence[0].node_count
    blocks = _as_blocks(omega, n_nodes)
    for v in mixing_sequence:
        if v.kind != "metropolis":
            raise ValueError("undirected averaging needs metropolis matrices")
        if v.node_count != n_nodes:
            raise ValueError("mixing matrices disagree on node count")
        blocks = v.entries @ blocks
    return blocks.reshape(np.asarray(omega).shape)


def push_sum(
    mixing_sequence: Sequence[MixingMatrix], omega: np.ndarray
) -> np.ndarray:
    """Ratio-of-sums averaging over column-stochastic rounds: values and
    scalar weights (initialized at 1) both mix, the output is their ratio."""
    if not mixing_sequence:
        return np.asarray(omega, dtype=float).copy()
    n_nodes = mixing_sequence[0].node_count
    z = _as_blocks(omega, n_nodes)
    w = np.ones(n_nodes)
    for v in mixing_sequence:
        if v.kind != "directed_pushsum":
            raise ValueError("push-sum needs directed_pushsum matrices")
        if v.node_count != n_nodes:
            raise ValueError("mixing matrices disagree on node count")
        z = v.entries @ z
        w = v.entries @ w
    if np.any(w < 1e-300):
        raise DegenerateWeightError("push-sum weight underflow")
    out = z / w[:, None]
    return out.reshape(np.asarray(omega).shape)


def exact_average(omega: np.ndarray, node_count: int) -> np.ndarray:
    """Replace every block by the arithmetic mean of all blocks."""
    blocks = _as_blocks(omega, node_count)
    mean = blocks.mean(axis=0)
    out = np.broadcast_to(mean, blocks.shape).copy()
    return out.reshape(np.asarray(omega).shape)


def _metropolis_entries(n: int, edges: np.ndarray) -> np.ndarray:
    v = np.zeros((n, n))
    if len(edges):
        deg = np.bincount(edges.ravel(), minlength=n)
        i, j = edges[:, 0], edges[:, 1]
        w = 1.0 / (np.maximum(deg[i], deg[j]) + 1.0)
        v[i, j] = w
        v[j, i] = w
    np.fill_diagonal(v, 1.0 - v.sum(axis=1))
    return v


def _directed_entries(n: int, edges: np.ndarray) -> np.ndarray:
    out_deg = (np.bincount(edges[:, 0], minlength=n) if len(edges)
               else np.zeros(n, dtype=int))
    col_w = 1.0 / (out_deg + 1.0)
    v = np.zeros((n, n))
    if len(edges):
        v[edges[:, 1], edges[:, 0]] = col_w[edges[:, 0]]
    v[np.arange(n), np.arange(n)] = col_w
    return v


def round_matrices(
    plan: TimeVaryingGraphPlan, kind: str, t_start: int, rounds: int
) -> list[MixingMatrix]:
    """Mixing matrices for rounds t_start+1 .. t_start+rounds of a plan,
    built straight from the sampled edge indices."""
    from .graph import sample_edge_indices

    base_edges = np.asarray(plan.base.edges, dtype=int).reshape(-1, 2)
    n = plan.base.node_count
    build = _metropolis_entries if kind == "metropolis" else _directed_entries
    out = []
    for r in range(1, rounds + 1):
        idx = sample_edge_indices(plan, t_start + r)
        out.append(MixingMatrix(build(n, base_edges[idx]), kind))
    return out


def averaging_operator(
    plan: TimeVaryingGraphPlan, kind: str, t_start: int, rounds: int
) -> Callable[[np.ndarray], np.ndarray]:
    """Multi-round approximate-averaging operator consuming ``rounds``
    communication rounds starting after time t_start."""
    mats = round_matrices(plan, kind, t_start, rounds)
    if kind == "metropolis":
        return lambda omega: approx_average_undirected(mats, omega)
    return lambda omega: push_sum(mats, omega)


_SATURATION_FLOOR = 64 * np.finfo(float).eps


def estimate_decay(
    plan: TimeVaryingGraphPlan,
    mixing_kind: str,
    q_max: int,
    trials: int,
    seed: int,
    block_dim: int = 3,
) -> tuple[float, float]:
    """Fit the geometric envelope ||R_q(w) - avg(w)|| <= N * Gamma * beta^q.

    Runs random unit-norm inputs through q = 1..q_max rounds over freshly
    sampled graph sequences and fits log residual against q by least squares.
    Returns (Gamma, beta) with beta = exp(slope) clamped into (0, 1) and
    Gamma inflated so the envelope dominates every observed residual.
    Residuals at float-rounding level are excluded from the slope fit.
    """
    if q_max < 2:
        raise ValueError("q_max must be at least 2")
    if trials < 1:
        raise ValueError("trials must be positive")
    n_nodes = plan.base.node_count
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xDECA]))

    qs = np.arange(1, q_max + 1)
    residuals = np.zeros((q_max, trials))
    floor = _SATURATION_FLOOR * np.sqrt(n_nodes)
    for col in range(trials):
        omega = rng.standard_normal(n_nodes * block_dim)
        omega /= np.linalg.norm(omega)
        target = exact_average(omega, n_nodes)
        t0 = int(rng.integers(0, 10_000))
        for q in qs:
            op = averaging_operator(plan, mixing_kind, t0, int(q))
            residuals[q - 1, col] = np.linalg.norm(op(omega) - target)

    mean_res = residuals.mean(axis=1)
    live = mean_res > floor
    if not np.any(live):
        # mixing is exact to machine precision in a single round
        return 1.0 / n_nodes, 1e-3
    if np.count_nonzero(live) == 1:
        beta = 1e-3
    else:
        slope, intercept = np.polyfit(qs[live], np.log(mean_res[live]), 1)
        if slope >= 0:
            raise NoDecayError(f"fitted slope {slope:.3g} is not negative")
        beta = float(np.exp(slope))
    beta = min(max(beta, 1e-6), 1.0 - 1e-9)
    gamma = float(np.max(residuals / (n_nodes * beta ** qs)[:, None])) * 1.05
    return gamma, beta
