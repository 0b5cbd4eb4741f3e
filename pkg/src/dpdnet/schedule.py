"""Step-size state machines, the dual-bound computation, communication
budgets, and executable step-condition checkers.

The step state couples the primal steps (tilde_tau, tau), the consensus dual
step gamma, the momentum weight eta, and the per-agent cone-dual steps
kappa_i = gamma * delta / C_gi^2. One advance applies
gamma+ = gamma * sqrt(1 + mu * tilde_tau), eta+ = gamma/gamma+,
tilde_tau+ = tilde_tau * eta+, which keeps gamma * tilde_tau invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .problems import Instance

__all__ = [
    "StepState",
    "CommSchedule",
    "ConditionCheck",
    "init_static",
    "init_dynamic",
    "advance",
    "check_static_conditions",
    "check_dynamic_conditions",
    "q_of",
    "summability_partial",
    "summability_report",
    "compute_B",
]

CHECK_TOL = 1e-10


@dataclass(frozen=True)
class StepState:
    """Coupled step sizes at iteration k."""

    k: int
    tilde_tau: float
    tau: float
    gamma: float
    eta: float
    kappa: tuple[float, ...]
    delta: float
    mu: float
    B: float
    cg_sq: tuple[float, ...]

    def __post_init__(self):
        if min(self.tilde_tau, self.tau, self.gamma, self.delta) <= 0:
            raise ValueError("step sizes must be positive")
        if self.mu < 0 or self.B < 0:
            raise ValueError("mu and B must be nonnegative")


def _fresh_state(instance: Instance, gamma0: float, delta: float, B: float,
                 mu: float, tilde_tau0: float) -> StepState:
    cg_sq = tuple(a.C_g ** 2 for a in instance.agents)
    kappa = tuple(gamma0 * delta / c for c in cg_sq)
    return StepState(
        k=0,
        tilde_tau=tilde_tau0,
        tau=1.0 / (1.0 / tilde_tau0 + mu),
        gamma=gamma0,
        eta=0.0,
        kappa=kappa,
        delta=delta,
        mu=mu,
        B=B,
        cg_sq=cg_sq,
    )


def init_static(instance: Instance, graph: Graph, gamma0: float, delta: float,
                B: float, alpha: float, mu: float,
                tilde_tau0: float | None = None) -> StepState:
    """Largest admissible primal step for the static-network algorithm:
    tilde_tau0 = (L_max(f) + 2(alpha d_max + 2 gamma0 (2 d_max + delta)
    + B L_max(G)))^{-1}."""
    if gamma0 <= 0 or delta <= 0:
        raise ValueError("gamma0 and delta must be positive")
    if B < 0:
        raise ValueError("B must be nonnegative")
    d_max = graph.max_degree
    bar_tau = 1.0 / (
        instance.L_max_f
        + 2.0 * (alpha * d_max + 2.0 * gamma0 * (2.0 * d_max + delta)
                 + B * instance.L_max_G)
    )
    if tilde_tau0 is None:
        tilde_tau0 = bar_tau
    elif tilde_tau0 > bar_tau * (1.0 + 1e-12):
        raise ValueError(f"tilde_tau0 exceeds the admissible {bar_tau}")
    return _fresh_state(instance, gamma0, delta, B, mu, tilde_tau0)


def init_dynamic(instance: Instance, gamma0: float, delta: float, B: float,
                 alpha: float, mu: float,
                 tilde_tau0: float | None = None) -> StepState:
    """tilde_tau0 = (L_max(f) + alpha + 2 gamma0 (1 + delta)
    + 2 B L_max(G))^{-1} for the time-varying algorithm."""
    if gamma0 <= 0 or delta <= 0:
        raise ValueError("gamma0 and delta must be positive")
    if B < 0:
        raise ValueError("B must be nonnegative")
    bar_tau = 1.0 / (
        instance.L_max_f + alpha + 2.0 * gamma0 * (1.0 + delta)
        + 2.0 * B * instance.L_max_G
    )
    if tilde_tau0 is None:
        tilde_tau0 = bar_tau
    elif tilde_tau0 > bar_tau * (1.0 + 1e-12):
        raise ValueError(f"tilde_tau0 exceeds the admissible {bar_tau}")
    return _fresh_state(instance, gamma0, delta, B, mu, tilde_tau0)


def advance(state: StepState) -> StepState:
    """One schedule update; a fixed point when mu = 0."""
    gamma_next = state.gamma * math.sqrt(1.0 + state.mu * state.tilde_tau)
    eta_next = state.gamma / gamma_next
    # single-rounding form keeps gamma * tilde_tau conserved to ~1 ulp
    tilde_tau_next = state.tilde_tau * state.gamma / gamma_next
    return StepState(
        k=state.k + 1,
        tilde_tau=tilde_tau_next,
        tau=1.0 / (1.0 / tilde_tau_next + state.mu),
        gamma=gamma_next,
        eta=eta_next,
        kappa=tuple(gamma_next * state.delta / c for c in state.cg_sq),
        delta=state.delta,
        mu=state.mu,
        B=state.B,
        cg_sq=state.cg_sq,
    )


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    satisfied: bool
    slack: float


def _ineq(name: str, lhs: float, rhs: float) -> ConditionCheck:
    slack = lhs - rhs
    return ConditionCheck(name, slack >= -CHECK_TOL, slack)


def _eq(name: str, lhs: float, rhs: float) -> ConditionCheck:
    gap = abs(lhs - rhs)
    return ConditionCheck(name, gap <= CHECK_TOL * max(1.0, abs(lhs)), -gap)


def check_static_conditions(state: StepState, next_state: StepState,
                            instance: Instance, graph: Graph,
                            alpha: float) -> list[ConditionCheck]:
    """Every inequality the static convergence argument imposes on a
    consecutive pair of step states, with the free constant fixed at 2 and
    the dual-regularity split alpha^{k+1} = 2 gamma^k (delta + 2 d_max)."""
    d_max = graph.max_degree
    s, t = state, next_state
    alpha_next = 2.0 * s.gamma * (s.delta + 2.0 * d_max)
    alpha_cur_eta = 2.0 * s.gamma * s.eta ** 2 * (s.delta + 2.0 * d_max)
    checks = [
        _ineq("primal_telescoping", 1.0 / s.tilde_tau + s.mu,
              1.0 / (t.tilde_tau * t.eta)),
        _ineq(
            "primal_bound", 1.0 / s.tilde_tau,
            instance.L_max_f + 2.0 * (alpha * d_max + alpha_cur_eta
                                      + s.B * instance.L_max_G),
        ),
        _eq("eta_ratio", t.eta, s.gamma / t.gamma),
        _ineq("lambda_step_regularity", 1.0 / s.gamma, 4.0 * d_max / alpha_next),
        _ineq("lambda_step_telescoping", 1.0 / s.gamma,
              1.0 / (t.gamma * t.eta)),
    ]
    for i, (k_cur, k_next, c2) in enumerate(zip(s.kappa, t.kappa, s.cg_sq)):
        checks.append(
            _ineq(f"theta_step_regularity[{i}]", 1.0 / k_cur,
                  2.0 * c2 / alpha_next)
        )
        checks.append(
            _ineq(f"theta_step_telescoping[{i}]", 1.0 / k_cur,
                  1.0 / (k_next * t.eta))
        )
    return checks


def check_dynamic_conditions(state: StepState, next_state: StepState,
                             instance: Instance,
                             alpha: float) -> list[ConditionCheck]:
    """Scalar form of the six step conditions of the time-varying analysis
    plus the sufficient primal bound
    1/tilde_tau^k >= L_max(f) + alpha + 2(gamma^k (1+delta) + B L_max(G))."""
    s, t = state, next_state
    checks = [
        _ineq("primal_telescoping", s.gamma / s.tau,
              t.gamma * (1.0 / t.tau - s.mu)),
        _ineq("lambda_step_telescoping", 1.0, t.gamma / t.gamma),
        _eq("gamma_eta_product", s.gamma, t.gamma * t.eta),
        _ineq(
            "primal_bound", 1.0 / s.tilde_tau,
            instance.L_max_f + alpha
            + 2.0 * (s.gamma * (1.0 + s.delta) + s.B * instance.L_max_G),
        ),
    ]
    a_quad = s.eta ** 2 * s.gamma * (1.0 + s.delta)
    for i, agent in enumerate(instance.agents):
        checks.append(
            _ineq(f"theta_step_telescoping[{i}]", s.gamma / s.kappa[i],
                  t.gamma / t.kappa[i])
        )
        checks.append(
            _ineq(
                f"momentum_curvature[{i}]",
                1.0 / s.tau - (agent.L_f + alpha),
                a_quad + s.eta * s.B * agent.L_g + s.B * agent.L_g,
            )
        )
        checks.append(
            _ineq(
                f"terminal_curvature[{i}]",
                1.0 / s.tau - s.mu,
                2.0 * (a_quad + s.eta * s.B * agent.L_g),
            )
        )
    return checks


LOGARITHMIC = "logarithmic"
POLYNOMIAL = "polynomial"
CONSTANT = "constant"


@dataclass(frozen=True)
class CommSchedule:
    """Communication budget q_k per averaging invocation.

    logarithmic: q_k = ceil((5 + c) * log_{1/varsigma}(k + 1))
    polynomial:  q_k = ceil((k + 1)^{1/p})
    constant:    q_k = q

    All schedules are floored at one round.
    """

    kind: str
    c: float = 0.0
    varsigma: float = math.exp(-1.0)
    p: float = 1.0
    q: int = 1

    def __post_init__(self):
        if self.kind == LOGARITHMIC:
            if not (0.0 < self.varsigma < 1.0):
                raise ValueError("varsigma must lie in (0, 1)")
            if self.c < 0:
                raise ValueError("c must be nonnegative")
        elif self.kind == POLYNOMIAL:
            if self.p < 1:
                raise ValueError("p must be at least 1")
        elif self.kind == CONSTANT:
            if self.q < 1:
                raise ValueError("q must be at least 1")
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    def __call__(self, k: int) -> int:
        return q_of(self, k)


def q_of(schedule: CommSchedule, k: int) -> int:
    """Integer rounds at iteration k: analytic value rounded up, minimum 1."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if schedule.kind == CONSTANT:
        return schedule.q
    if schedule.kind == LOGARITHMIC:
        value = (5.0 + schedule.c) * math.log(k + 1) / math.log(
            1.0 / schedule.varsigma
        )
    else:
        value = (k + 1) ** (1.0 / schedule.p)
    return max(1, math.ceil(value - 1e-12))


def summability_partial(schedule: CommSchedule, beta: float, K: int,
                        power: int = 4) -> float:
    """Partial sum sum_{k=1..K} beta^{q_{k-1}} k^power."""
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie in (0, 1)")
    if power not in (3, 4):
        raise ValueError("power must be 3 or 4")
    total = 0.0
    for k in range(1, K + 1):
        total += beta ** q_of(schedule, k - 1) * float(k) ** power
    return total


def summability_report(schedule: CommSchedule, beta: float, k_lo: int,
                       k_hi: int, power: int = 4) -> dict:
    """Partial sums at two horizons and their relative change; a large
    relative change flags a schedule too slow for the given beta."""
    s_lo = summability_partial(schedule, beta, k_lo, power)
    s_hi = summability_partial(schedule, beta, k_hi, power)
    rel_change = abs(s_hi - s_lo) / max(s_lo, 1e-300)
    return {
        "S_lo": s_lo,
        "S_hi": s_hi,
        "rel_change": rel_change,
        "diverging": rel_change > 0.1,
    }


def _b_root(theta_norm: float, a: float, A0: float) -> float:
    """Larger root of B^2 - (2 theta_norm + a) B + (theta_norm^2 - A0) = 0,
    the smallest B satisfying B >= theta_norm + sqrt(a B + A0)."""
    p = 2.0 * theta_norm + a
    disc = p ** 2 - 4.0 * (theta_norm ** 2 - A0)
    return (p + math.sqrt(max(disc, 0.0))) / 2.0


def compute_B(instance: Instance, gamma0: float, delta: float,
              theta_star_norm: float, x_gap: float, d_max: int = 0,
              alpha: float = 0.0) -> float:
    """Dual-norm bound feeding the step initialization, solved in closed form
    from the quadratic self-consistency inequality and inflated 10%.

    Returns 0 when every constraint is affine (the bound is only ever used
    multiplied by L_max(G)).
    """
    if theta_star_norm < 0 or x_gap < 0:
        raise ValueError("estimates must be nonnegative")
    if instance.L_max_G == 0:
        return 0.0
    c_min_sq = instance.C_min ** 2
    c_max_sq = max(a.C_g for a in instance.agents) ** 2
    a_lin = 2.0 * gamma0 * delta * instance.L_max_G * x_gap ** 2 / c_min_sq
    A0 = (
        (4.0 * gamma0 * (delta + 2.0 * d_max) + instance.L_max_f
         + 2.0 * alpha * d_max) * gamma0 * delta * x_gap ** 2 / c_min_sq
        + c_max_sq * theta_star_norm ** 2 / c_min_sq
    )
    return 1.1 * _b_root(theta_star_norm, a_lin, A0)
