"""Distributed primal-dual solver for a static undirected network, run as a
synchronous simulation: per-node state, one communication round per
iteration carrying both the running primal sum s_i and the iterate x_i.

Node i keeps (x_i, theta_i, s_i). Each iteration builds the momentum term
from extrapolated constraint duals and neighbor differences, takes a
proximal primal step that includes the consensus-regularization pull, a
projected dual ascent step on the local conic constraint, and accumulates
s_i. The edge duals are never stored: the identity lambda^k = M s^k reduces
them to neighbor differences of s.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .cones_prox import project_dual_cone, prox
from .graph import Graph, lambda2, laplacian
from .metrics import (
    RunTrace,
    TraceRecord,
    consensus_violation,
    infeasibility,
    relative_error,
    stacked_objective,
    suboptimality,
    theorem_gap,
)
from .problems import Instance, choose_alpha_mu
from .schedule import (
    StepState,
    advance,
    check_static_conditions,
    compute_B,
    init_static,
)

__all__ = [
    "BPolicy",
    "DpdaState",
    "NumericalAbort",
    "dpda_init",
    "dpda_step",
    "run_dpda",
    "default_static_steps",
]


class NumericalAbort(FloatingPointError):
    """Non-finite iterate detected; usually a mis-set step size."""


@dataclass(frozen=True)
class BPolicy:
    """How the dual-norm bound B is chosen: 'affine_zero' demands affine
    constraints, 'user' takes the given value, 'oracle' derives it from a
    reference solution attached to the instance."""

    mode: str = "affine_zero"
    value: float = 0.0

    def resolve(self, instance: Instance, gamma0: float, delta: float,
                x0_blocks: np.ndarray, d_max: int, alpha: float) -> float:
        if self.mode == "affine_zero":
            if instance.L_max_G > 0:
                raise ValueError(
                    "affine_zero B-policy on a nonlinear-constraint instance"
                )
            return 0.0
        if self.mode == "user":
            if self.value < 0:
                raise ValueError("B must be nonnegative")
            return self.value
        if self.mode == "oracle":
            ref = instance.reference_solution
            if ref is None:
                raise ValueError(
                    "oracle B-policy needs a reference solution on the "
                    "instance"
                )
            gap = float(np.linalg.norm(
                np.asarray(x0_blocks) - ref.x_star[None, :]
            ))
            return compute_B(
                instance, gamma0, delta, ref.theta_norm, gap,
                d_max=d_max, alpha=alpha,
            )
        raise ValueError(f"unknown B policy {self.mode!r}")


@dataclass(frozen=True)
class DpdaState:
    """Double-buffered per-node state shared with the schedule."""

    instance: Instance
    graph: Graph
    adjacency: tuple[tuple[int, ...], ...]
    x: np.ndarray
    x_prev: np.ndarray
    theta: tuple[np.ndarray, ...]
    theta_prev: tuple[np.ndarray, ...]
    s: np.ndarray
    step: StepState
    alpha: float


def default_static_steps(instance: Instance, graph: Graph) -> tuple[float, float]:
    """(gamma0, delta) defaults per experiment family: the least-squares
    family couples both to L_max(f) and the network degree, the projection
    family uses gamma0 = 1/4 and delta = C_min."""
    if instance.family == "classo":
        delta = instance.L_max_f
        gamma0 = 1.0 / (2.0 * graph.max_degree + instance.L_max_f)
        return gamma0, delta
    return 0.25, instance.C_min


def _check_domain(instance: Instance, x0: np.ndarray) -> None:
    for i, agent in enumerate(instance.agents):
        r = agent.prox_rho.domain_radius
        if np.linalg.norm(x0[i]) > r * (1.0 + 1e-12):
            raise ValueError(f"x0 block {i} outside the domain ball")


def dpda_init(instance: Instance, graph: Graph, gamma0: float | None = None,
              delta: float | None = None, x0: np.ndarray | None = None,
              b_policy: BPolicy | None = None,
              safety_factor: float = 1.025) -> DpdaState:
    """Initial solver state: x^{-1} = x^0, duals at zero, s^0 = 0, with
    (alpha, mu) from the strong-convexity rule at lambda_2 of the Laplacian
    and the largest admissible primal step."""
    if graph.directed:
        raise ValueError("static solver needs an undirected graph")
    if graph.node_count != instance.node_count:
        raise ValueError("graph and instance disagree on the agent count")
    if not graph.is_connected():
        raise ValueError("graph must be connected")
    n = instance.dim
    if x0 is None:
        x0 = np.zeros((instance.node_count, n))
    x0 = np.asarray(x0, dtype=float).reshape(instance.node_count, n)
    _check_domain(instance, x0)

    g0, dl = default_static_steps(instance, graph)
    gamma0 = g0 if gamma0 is None else gamma0
    delta = dl if delta is None else delta

    # lambda_2 only matters on the regularized path (some agent not
    # strongly convex); a single node has no positive Laplacian eigenvalue
    lam2 = (lambda2(laplacian(graph)) if instance.ubar_mu <= 0
            else 1.0)
    alpha, mu = choose_alpha_mu(
        instance, "static", lam2=lam2, safety_factor=safety_factor
    )
    b_policy = b_policy or BPolicy("affine_zero" if instance.L_max_G == 0
                                   else "oracle")
    b_value = b_policy.resolve(
        instance, gamma0, delta, x0, graph.max_degree, alpha
    )
    step = init_static(instance, graph, gamma0, delta, b_value, alpha, mu)
    theta0 = tuple(np.zeros(a.constraint_dim) for a in instance.agents)
    return DpdaState(
        instance=instance,
        graph=graph,
        adjacency=tuple(tuple(graph.neighbors(i))
                        for i in range(graph.node_count)),
        x=x0.copy(),
        x_prev=x0.copy(),
        theta=theta0,
        theta_prev=theta0,
        s=np.zeros_like(x0),
        step=step,
        alpha=alpha,
    )


def dpda_step(state: DpdaState, guard=None) -> DpdaState:
    """One synchronous iteration. Every node reads only its own block and
    the previous round's (s_j, x_j) of its neighbors; ``guard(i, j)`` is
    invoked on each neighbor read so tests can enforce locality."""
    inst = state.instance
    st = state.step
    eta, gamma, tau = st.eta, st.gamma, st.tau
    x, s = state.x, state.s
    n_nodes = inst.node_count

    x_new = np.empty_like(x)
    s_new = np.empty_like(s)
    theta_new = []
    for i in range(n_nodes):
        agent = inst.agents[i]
        s_diff = np.zeros(inst.dim)
        x_diff = np.zeros(inst.dim)
        for j in state.adjacency[i]:
            if guard is not None:
                guard(i, j)
            s_diff += s[i] - s[j]
            x_diff += x[i] - x[j]

        if agent.constraint_dim:
            p = ((1.0 + eta) * (agent.g_jacobian(x[i]).T @ state.theta[i])
                 - eta * (agent.g_jacobian(state.x_prev[i]).T
                          @ state.theta_prev[i]))
        else:
            p = np.zeros(inst.dim)
        p = p + s_diff + eta * gamma * x_diff

        drive = agent.f_grad(x[i]) + p + state.alpha * x_diff
        x_new[i] = prox(agent.prox_rho, x[i] - tau * drive, tau)
        if agent.constraint_dim:
            theta_new.append(project_dual_cone(
                agent.cone,
                state.theta[i] + st.kappa[i] * agent.g_value(x_new[i]),
            ))
        else:
            theta_new.append(state.theta[i])
        s_new[i] = s[i] + gamma * x_new[i]

    if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(s_new))):
        raise NumericalAbort(f"non-finite iterate at k={st.k}")
    return replace(
        state,
        x=x_new,
        x_prev=x,
        theta=tuple(theta_new),
        theta_prev=state.theta,
        s=s_new,
        step=advance(st),
    )


def run_dpda(instance: Instance, graph: Graph, iterations: int,
             gamma0: float | None = None, delta: float | None = None,
             x0: np.ndarray | None = None, b_policy: BPolicy | None = None,
             stride: int = 1, check_conditions: bool = False,
             safety_factor: float = 1.025,
             keep_snapshots: bool = True) -> RunTrace:
    """Run the static solver and record metrics at the given stride.

    Reference-dependent columns appear only when the instance carries a
    reference solution; condition checking accumulates any step-rule
    violations into the trace metadata.
    """
    if iterations < 1:
        raise ValueError("iterations must be positive")
    state = dpda_init(instance, graph, gamma0, delta, x0, b_policy,
                      safety_factor)
    ref = instance.reference_solution
    phi_star = instance.varphi_central(ref.x_star) if ref is not None else None

    trace = RunTrace(metadata={
        "algorithm": "dpda",
        "family": instance.family,
        "seed": instance.seed,
        "alpha": state.alpha,
        "mu": state.step.mu,
        "B": state.step.B,
        "gamma0": state.step.gamma,
        "tilde_tau0": state.step.tilde_tau,
        "delta": state.step.delta,
        "iterations": iterations,
        "stride": stride,
        "condition_failures": 0,
        "worst_condition_slack": np.inf,
    })

    xbar = np.zeros_like(state.x)
    weight_sum = 0.0
    gamma_base = state.step.gamma

    for k in range(1, iterations + 1):
        prev_step = state.step
        state = dpda_step(state)
        if check_conditions:
            for chk in check_static_conditions(
                prev_step, state.step, instance, graph, state.alpha
            ):
                trace.metadata["worst_condition_slack"] = min(
                    trace.metadata["worst_condition_slack"], chk.slack
                )
                if not chk.satisfied:
                    trace.metadata["condition_failures"] += 1

        w = prev_step.gamma / gamma_base
        weight_sum += w
        xbar += (w / weight_sum) * (state.x - xbar)

        if k % stride == 0 or k == iterations:
            values = {
                "gamma": prev_step.gamma,
                "tilde_tau": prev_step.tilde_tau,
                "theta_norm": float(np.sqrt(
                    sum(float(t @ t) for t in state.theta)
                )),
                "infeas_last": infeasibility(state.x, instance),
                "infeas_ergodic": infeasibility(xbar, instance),
                "consensus_viol": consensus_violation(xbar, graph),
            }
            if ref is not None:
                values["rel_err_last"] = relative_error(state.x, ref.x_star)
                values["rel_err_ergodic"] = relative_error(xbar, ref.x_star)
                values["subopt_ergodic"] = suboptimality(
                    xbar, instance, state.alpha, graph, phi_star
                )
                values["theorem_gap"] = theorem_gap(
                    xbar, instance, ref.theta_star, state.alpha, graph,
                    phi_star,
                )
            trace.append(TraceRecord(
                k=k, t_k=k, values=values,
                x_last=state.x.copy() if keep_snapshots else None,
                x_ergodic=xbar.copy() if keep_snapshots else None,
            ))

    trace.metadata["N_K"] = weight_sum
    trace.metadata["final_gamma_over_tilde_tau"] = (
        state.step.gamma / state.step.tilde_tau
    )
    return trace
