"""Render the standard convergence figures from a trace CSV.

One PNG per metric group, written next to the delimited trace (or into an
explicit output directory): iterate/ergodic error, infeasibility and
consensus violation, certificate decay, and the step-size trajectories.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import read_trace_csv

FIGURE_GROUPS = [
    ("errors", "relative error",
     [("rel_err_last", "iterate"), ("rel_err_ergodic", "ergodic")]),
    ("feasibility", "constraint and consensus residuals",
     [("infeas_last", "infeasibility (iterate)"),
      ("infeas_ergodic", "infeasibility (ergodic)"),
      ("consensus_viol", "consensus violation")]),
    ("certificates", "optimality certificates",
     [("subopt_ergodic", "ergodic suboptimality"),
      ("theorem_gap", "certificate")]),
    ("steps", "step sizes",
     [("gamma", "gamma"), ("tilde_tau", "tilde_tau")]),
]


def render_trace_figures(trace_path: str, out_dir: str | None = None):
    """Write one log-log PNG per populated metric group; returns the paths."""
    trace = read_trace_csv(trace_path)
    ks = trace.ks
    base = os.path.basename(trace_path)
    stem = base[:-4] if base.endswith(".csv") else base
    target = out_dir or os.path.dirname(os.path.abspath(trace_path))
    os.makedirs(target, exist_ok=True)

    written = []
    for name, title, series in FIGURE_GROUPS:
        populated = []
        for column, label in series:
            vals = trace.column(column)
            if not (vals > 0).any():
                continue
            populated.append((column, label, vals))
        if not populated:
            continue
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for column, label, vals in populated:
            mask = vals > 0
            ax.loglog(ks[mask], vals[mask], label=label, linewidth=1.2)
        ax.set_xlabel("iteration k")
        ax.set_title(title, fontsize=10)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = os.path.join(target, f"{stem}_{name}.png")
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(path)
    return written
