"""Run traces, error statistics, rate fitting, and the delimited trace
format shared by the CLI and the audit path.

Column convention: a record at iteration k holds the iterate produced by
iteration k together with the step values (gamma, tilde_tau) that produced
it, i.e. gamma = gamma^{k-1}. Ergodic columns refer to the step-weighted
running average with weights gamma^{k-1}/gamma^0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .cones_prox import distance_to_cone
from .graph import Graph
from .mixing import exact_average
from .problems import Instance

__all__ = [
    "TraceRecord",
    "RunTrace",
    "CSV_COLUMNS",
    "relative_error",
    "infeasibility",
    "consensus_violation",
    "stacked_objective",
    "suboptimality",
    "theorem_gap",
    "rate_fit",
    "write_trace_csv",
    "read_trace_csv",
]

CSV_COLUMNS = [
    "k", "t_k", "rel_err_last", "rel_err_ergodic", "infeas_last",
    "infeas_ergodic", "consensus_viol", "subopt_ergodic", "theorem_gap",
    "gamma", "tilde_tau", "theta_norm", "nu_norm", "e1", "e2", "e3",
]


@dataclass
class TraceRecord:
    k: int
    t_k: int
    values: dict[str, float] = field(default_factory=dict)
    x_last: np.ndarray | None = None
    x_ergodic: np.ndarray | None = None


@dataclass
class RunTrace:
    records: list[TraceRecord] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def append(self, record: TraceRecord) -> None:
        if self.records:
            last = self.records[-1]
            if record.k <= last.k:
                raise ValueError("iteration indices must increase")
            if record.t_k < last.t_k:
                raise ValueError("round counter must be nondecreasing")
        self.records.append(record)

    def column(self, name: str) -> np.ndarray:
        return np.array(
            [r.values.get(name, np.nan) for r in self.records], dtype=float
        )

    @property
    def ks(self) -> np.ndarray:
        return np.array([r.k for r in self.records], dtype=int)


def relative_error(x_blocks: np.ndarray, x_star: np.ndarray) -> float:
    """max_i ||x_i - x_star|| / ||x_star||."""
    x_star = np.asarray(x_star, dtype=float)
    denom = np.linalg.norm(x_star)
    if denom == 0:
        raise ValueError("reference solution has zero norm")
    diffs = np.linalg.norm(np.asarray(x_blocks) - x_star[None, :], axis=1)
    return float(diffs.max() / denom)


def infeasibility(x_blocks: np.ndarray, instance: Instance) -> float:
    """max_i of the distance from g_i(x_i) to -K_i; the positive-part norm
    for orthant cones."""
    worst = 0.0
    for i, agent in enumerate(instance.agents):
        if agent.constraint_dim == 0:
            continue
        worst = max(
            worst, distance_to_cone(agent.cone, agent.g_value(x_blocks[i]))
        )
    return worst


def consensus_violation(x_blocks: np.ndarray, graph: Graph | None) -> float:
    """Edge-difference norm ||M x|| on a static graph, or the distance to the
    consensus cone when no graph is given (time-varying runs)."""
    x_blocks = np.asarray(x_blocks, dtype=float)
    if graph is None:
        n_nodes = x_blocks.shape[0]
        return float(np.linalg.norm(
            x_blocks - exact_average(x_blocks, n_nodes)
        ))
    total = 0.0
    for i, j in graph.edges:
        total += float(np.sum((x_blocks[i] - x_blocks[j]) ** 2))
    return float(np.sqrt(total))


def stacked_objective(x_blocks: np.ndarray, instance: Instance, alpha: float,
                      graph: Graph | None) -> float:
    """sum_i varphi_i(x_i) plus the consensus regularization: the Laplacian
    quadratic on a static graph, the squared consensus distance otherwise."""
    base = instance.varphi_stacked(np.asarray(x_blocks, dtype=float))
    if alpha == 0.0:
        return base
    return base + 0.5 * alpha * consensus_violation(x_blocks, graph) ** 2


def suboptimality(x_blocks: np.ndarray, instance: Instance, alpha: float,
                  graph: Graph | None, phi_star: float) -> float:
    return abs(stacked_objective(x_blocks, instance, alpha, graph) - phi_star)


def theorem_gap(x_blocks: np.ndarray, instance: Instance, theta_star,
                alpha: float, graph: Graph | None, phi_star: float) -> float:
    """Composite convergence certificate: the larger of the ergodic
    suboptimality and the consensus violation plus the dual-weighted
    infeasibility sum."""
    dual_term = 0.0
    for i, agent in enumerate(instance.agents):
        if agent.constraint_dim == 0:
            continue
        dual_term += float(np.linalg.norm(theta_star[i])) * distance_to_cone(
            agent.cone, agent.g_value(x_blocks[i])
        )
    cons = consensus_violation(x_blocks, graph)
    sub = suboptimality(x_blocks, instance, alpha, graph, phi_star)
    return max(sub, cons + dual_term)


def rate_fit(trace: RunTrace, metric: str,
             k_range: tuple[int, int] | None = None) -> float:
    """Least-squares slope of log(metric) against log(k).

    Without an explicit range the first 10% of recorded iterations are
    dropped as transient.
    """
    ks = trace.ks
    vals = trace.column(metric)
    if k_range is None:
        lo = ks[0] + int(0.1 * (ks[-1] - ks[0]))
        k_range = (lo, int(ks[-1]))
    mask = (ks >= k_range[0]) & (ks <= k_range[1]) & ~np.isnan(vals)
    if np.count_nonzero(mask) < 10:
        raise ValueError("need at least 10 records in the fit range")
    if np.any(vals[mask] <= 0):
        raise ValueError("metric must be positive in the fit range")
    slope, _ = np.polyfit(np.log(ks[mask]), np.log(vals[mask]), 1)
    return float(slope)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_trace_csv(trace: RunTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in trace.records:
            row = [str(rec.k), str(rec.t_k)]
            for col in CSV_COLUMNS[2:]:
                v = rec.values.get(col)
                row.append("" if v is None or not np.isfinite(v) else _fmt(v))
            writer.writerow(row)


def read_trace_csv(path) -> RunTrace:
    trace = RunTrace()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["k", "t_k"]:
            raise ValueError("not a trace file")
        for row in reader:
            values = {
                name: float(cell)
                for name, cell in zip(header[2:], row[2:])
                if cell != ""
            }
            trace.append(
                TraceRecord(k=int(row[0]), t_k=int(float(row[1])),
                            values=values)
            )
    return trace
