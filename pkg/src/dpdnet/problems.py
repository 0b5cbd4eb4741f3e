"""Agent problems, aggregate convexity constants, and instance generators
for the two built-in experiment families.

Family "ellipsoid": project a point onto the intersection of agent-private
ellipsoids, the quadratic objective split evenly across agents so each
agent's smooth part is strongly convex.

Family "classo": isotonic constrained LASSO with per-agent least-squares
blocks, an l1 penalty split across agents, and the affine ordering
constraint A x <= 0 shared by everyone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cones_prox import (
    Cone,
    NONNEG_ORTHANT,
    ProxFn,
    L1_PLUS_BALL,
    INDICATOR_BALL,
)

__all__ = [
    "AgentProblem",
    "Instance",
    "ReferenceSolution",
    "mu_alpha_static",
    "mu_alpha_dynamic",
    "choose_alpha_mu",
    "gen_ellipsoid_instance",
    "gen_classo_instance",
    "aggregate_constants",
    "isotonic_matrix",
    "save_instance",
    "load_instance",
]

FORMAT_NAME = "dpdnet-instance"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class AgentProblem:
    """One agent's private data: prox-capable nonsmooth part, smooth part
    with gradient, constraint map with Jacobian, and the constraint cone."""

    dim: int
    prox_rho: ProxFn
    f_value: Callable[[np.ndarray], float]
    f_grad: Callable[[np.ndarray], np.ndarray]
    L_f: float
    mu: float
    g_value: Callable[[np.ndarray], np.ndarray]
    g_jacobian: Callable[[np.ndarray], np.ndarray]
    L_g: float
    C_g: float
    cone: Cone
    domain_radius: float

    def __post_init__(self):
        if min(self.L_f, self.L_g, self.C_g) < 0 or self.mu < 0:
            raise ValueError("constants must be nonnegative")

    @property
    def constraint_dim(self) -> int:
        return self.cone.dim

    def varphi(self, x: np.ndarray) -> float:
        """Composite objective value rho(x) + f(x)."""
        return self.prox_rho.value(x) + self.f_value(x)

    def check_gradient(self, rng: np.random.Generator, trials: int = 5,
                       h: float = 1e-5, tol: float = 1e-5) -> None:
        """Central finite-difference check of f_grad at random points."""
        scale = min(self.domain_radius, 10.0)
        for _ in range(trials):
            x = rng.uniform(-0.3, 0.3, self.dim) * scale
            e = rng.standard_normal(self.dim)
            e /= np.linalg.norm(e)
            fd = (self.f_value(x + h * e) - self.f_value(x - h * e)) / (2 * h)
            if abs(fd - float(self.f_grad(x) @ e)) > tol * max(1.0, abs(fd)):
                raise AssertionError("finite-difference gradient check failed")

    def check_jacobian_bound(self, rng: np.random.Generator,
                             trials: int = 20) -> None:
        """||Jg(x)|| <= C_g on the domain ball, sampled points."""
        r = min(self.domain_radius, 1e6)
        for _ in range(trials):
            x = rng.standard_normal(self.dim)
            x *= rng.uniform(0, r) / max(np.linalg.norm(x), 1e-12)
            if self.constraint_dim == 0:
                continue
            nrm = np.linalg.norm(self.g_jacobian(x), 2)
            if nrm > self.C_g * (1.0 + 1e-9):
                raise AssertionError(
                    f"Jacobian bound violated: {nrm} > {self.C_g}"
                )


@dataclass(frozen=True)
class ReferenceSolution:
    """Known primal-dual solution attached to an instance, with provenance."""

    x_star: np.ndarray
    theta_star: tuple[np.ndarray, ...]
    provenance: str
    kkt_residual: float = float("nan")

    @property
    def theta_norm(self) -> float:
        return float(np.sqrt(sum(np.sum(t ** 2) for t in self.theta_star)))


@dataclass(frozen=True)
class Instance:
    """Collection of agent problems plus the aggregate constants the step
    rules need. Aggregates are recomputed from the agents, never trusted."""

    agents: tuple[AgentProblem, ...]
    bar_mu: float
    bar_L: float = field(init=False)
    L_max_f: float = field(init=False)
    L_max_G: float = field(init=False)
    C_min: float = field(init=False)
    ubar_mu: float = field(init=False)
    Delta: float = field(init=False)
    reference_solution: ReferenceSolution | None = None
    family: str | None = None
    params: dict | None = None
    seed: int | None = None

    def __post_init__(self):
        if not self.agents:
            raise ValueError("need at least one agent")
        dims = {a.dim for a in self.agents}
        if len(dims) != 1:
            raise ValueError("agents disagree on decision dimension")
        n_agents = len(self.agents)
        object.__setattr__(
            self, "bar_L",
            float(np.sqrt(sum(a.L_f ** 2 for a in self.agents) / n_agents)),
        )
        object.__setattr__(self, "L_max_f", max(a.L_f for a in self.agents))
        object.__setattr__(self, "L_max_G", max(a.L_g for a in self.agents))
        object.__setattr__(self, "C_min", min(a.C_g for a in self.agents))
        object.__setattr__(self, "ubar_mu", min(a.mu for a in self.agents))
        object.__setattr__(
            self, "Delta", max(a.domain_radius for a in self.agents)
        )
        if self.bar_mu < sum(a.mu for a in self.agents) - 1e-12:
            raise ValueError("bar_mu below the sum of agent moduli")

    @property
    def node_count(self) -> int:
        return len(self.agents)

    @property
    def dim(self) -> int:
        return self.agents[0].dim

    @property
    def constraint_dim(self) -> int:
        return sum(a.constraint_dim for a in self.agents)

    def varphi_central(self, x: np.ndarray) -> float:
        """sum_i varphi_i(x) at a single consensus point."""
        return float(sum(a.varphi(x) for a in self.agents))

    def varphi_stacked(self, x_blocks: np.ndarray) -> float:
        """sum_i varphi_i(x_i) over per-agent blocks (N, n)."""
        return float(
            sum(a.varphi(x_blocks[i]) for i, a in enumerate(self.agents))
        )

    def f_grad_central(self, x: np.ndarray) -> np.ndarray:
        g = np.zeros(self.dim)
        for a in self.agents:
            g += a.f_grad(x)
        return g

    def with_reference(self, ref: ReferenceSolution) -> "Instance":
        return Instance(
            agents=self.agents, bar_mu=self.bar_mu, reference_solution=ref,
            family=self.family, params=self.params, seed=self.seed,
        )


def mu_alpha_static(bar_mu: float, n_agents: int, alpha: float,
                    lam2: float, bar_L: float) -> float:
    """Strong-convexity modulus of the Laplacian-regularized stacked smooth
    part; positive once alpha exceeds 4 N bar_L^2 / (bar_mu * lambda_2)."""
    a = bar_mu / n_agents
    b = alpha * lam2
    return (a + b) / 2.0 - np.sqrt(((a - b) / 2.0) ** 2 + 4.0 * bar_L ** 2)


def mu_alpha_dynamic(bar_mu: float, n_agents: int, alpha: float,
                     bar_L: float) -> float:
    """Same modulus with the squared consensus distance as regularizer."""
    return mu_alpha_static(bar_mu, n_agents, alpha, 1.0, bar_L)


def choose_alpha_mu(instance: Instance, topology: str,
                    lam2: float | None = None,
                    safety_factor: float = 1.025) -> tuple[float, float]:
    """Pick the consensus-regularization weight and the modulus the step
    rule uses: (0, min_i mu_i) when every agent is strongly convex, else
    alpha = safety_factor * 4 N bar_L^2 / (bar_mu * lambda_2) and the
    resulting positive modulus.

    topology is 'static' (needs lam2) or 'dynamic' (lambda_2 = 1).
    """
    if safety_factor <= 1.0:
        raise ValueError("safety_factor must exceed 1")
    if topology == "static":
        if lam2 is None:
            raise ValueError("static topology needs lambda_2")
    elif topology == "dynamic":
        lam2 = 1.0
    else:
        raise ValueError(f"unknown topology {topology!r}")

    if instance.ubar_mu > 0:
        return 0.0, instance.ubar_mu
    if instance.bar_mu <= 0:
        raise ValueError("not strongly convex: bar_mu = 0")
    n = instance.node_count
    alpha = safety_factor * 4.0 * n * instance.bar_L ** 2 / (
        instance.bar_mu * lam2
    )
    mu = mu_alpha_static(instance.bar_mu, n, alpha, lam2, instance.bar_L)
    if mu <= 0:
        raise ValueError("regularized modulus is not positive")
    return alpha, mu


def _spawn(seed: int, count: int) -> list[np.random.Generator]:
    """Per-agent substreams so instances are reproducible independent of
    agent iteration order."""
    seqs = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.default_rng(s) for s in seqs]


def _quadratic_agent(a_mat: np.ndarray, b_vec: np.ndarray, c: float,
                     x0: np.ndarray, ball_radius: float,
                     n_agents: int) -> AgentProblem:
    n = len(b_vec)
    norm_a = float(np.linalg.norm(a_mat, 2))

    def f_value(x, _x0=x0, _N=n_agents):
        return float(np.sum((x - _x0) ** 2)) / (2.0 * _N)

    def f_grad(x, _x0=x0, _N=n_agents):
        return (x - _x0) / _N

    def g_value(x, _A=a_mat, _b=b_vec, _c=c):
        return np.array([0.5 * float(x @ (_A @ x)) + float(_b @ x) - _c])

    def g_jacobian(x, _A=a_mat, _b=b_vec):
        return (_A @ x + _b)[None, :]

    return AgentProblem(
        dim=n,
        prox_rho=ProxFn(INDICATOR_BALL, radius=ball_radius),
        f_value=f_value,
        f_grad=f_grad,
        L_f=1.0 / n_agents,
        mu=1.0 / n_agents,
        g_value=g_value,
        g_jacobian=g_jacobian,
        L_g=norm_a,
        C_g=ball_radius * norm_a + float(np.linalg.norm(b_vec)),
        cone=Cone(NONNEG_ORTHANT, 1),
        domain_radius=ball_radius,
    )


def gen_ellipsoid_instance(n: int, n_agents: int, ball_radius: float,
                           seed: int) -> Instance:
    """Projection of a random point onto the intersection of random
    ellipsoids {x: x'A_i x / 2 + b_i'x <= c_i} inside ||x|| <= ball_radius.

    x = 0 is a Slater point for every agent since c_i >= 0.5.
    """
    if n < 1 or n_agents < 1 or ball_radius <= 0:
        raise ValueError("bad dimensions")
    streams = _spawn(seed, n_agents + 1)
    x0 = streams[0].uniform(-1.0, 1.0, n)
    payload = []
    agents = []
    for i in range(n_agents):
        rng = streams[i + 1]
        r = rng.standard_normal((n, n))
        a_mat = r.T @ r / np.linalg.norm(r, 2)
        b_vec = rng.standard_normal(n)
        c = float(rng.uniform(0.5, 1.5))
        payload.append({"A": a_mat, "b": b_vec, "c": c})
        agents.append(
            _quadratic_agent(a_mat, b_vec, c, x0, ball_radius, n_agents)
        )
    return Instance(
        agents=tuple(agents),
        bar_mu=1.0,
        family="ellipsoid",
        params={
            "n": n, "N": n_agents, "D": ball_radius, "x0": x0,
            "agents": payload,
        },
        seed=int(seed),
    )


def isotonic_matrix(n: int) -> np.ndarray:
    """(n-1) x n forward-difference matrix; A x <= 0 orders x ascending."""
    a = np.zeros((n - 1, n))
    for k in range(n - 1):
        a[k, k] = 1.0
        a[k, k + 1] = -1.0
    return a


def _quad_modulus(c_mat: np.ndarray) -> float:
    """Convexity modulus of x -> ||C x - d||^2 / 2: lambda_min(C'C), which is
    zero whenever C has fewer rows than columns."""
    if c_mat.shape[0] < c_mat.shape[1]:
        return 0.0
    val = float(np.linalg.eigvalsh(c_mat.T @ c_mat)[0])
    return val if val > 1e-12 else 0.0


def _lasso_agent(c_mat: np.ndarray, d_vec: np.ndarray, a_iso: np.ndarray,
                 lam_over_n: float, ball_radius: float) -> AgentProblem:
    n = c_mat.shape[1]
    sv = np.linalg.svd(c_mat, compute_uv=False)

    def f_value(x, _C=c_mat, _d=d_vec):
        r = _C @ x - _d
        return 0.5 * float(r @ r)

    def f_grad(x, _C=c_mat, _d=d_vec):
        return _C.T @ (_C @ x - _d)

    def g_value(x, _A=a_iso):
        return _A @ x

    def g_jacobian(x, _A=a_iso):
        return _A

    return AgentProblem(
        dim=n,
        prox_rho=ProxFn(L1_PLUS_BALL, lam=lam_over_n, radius=ball_radius),
        f_value=f_value,
        f_grad=f_grad,
        L_f=float(sv[0] ** 2),
        mu=_quad_modulus(c_mat),
        g_value=g_value,
        g_jacobian=g_jacobian,
        L_g=0.0,
        C_g=float(np.linalg.norm(a_iso, 2)),
        cone=Cone(NONNEG_ORTHANT, n - 1),
        domain_radius=ball_radius,
    )


def _ascending_signal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Piecewise signal: n//4 ascending negatives, zeros, n//4 ascending
    positives; reproduces the 5/10/5 pattern at n = 20."""
    k = n // 4
    x = np.zeros(n)
    x[:k] = np.sort(rng.uniform(-10.0, 0.0, k))
    x[n - k:] = np.sort(rng.uniform(0.0, 10.0, k))
    return x


def gen_classo_instance(n: int, m: int, n_agents: int, lam: float,
                        seed: int, variant: str = "I") -> Instance:
    """Isotonic constrained LASSO with per-agent data blocks.

    Variant I rescales every C_i's singular values into [1, 3] so each agent
    is strongly convex; variant II zeroes the last agent's smallest singular
    value so only the stacked problem is strongly convex.
    """
    if variant not in ("I", "II"):
        raise ValueError("variant must be 'I' or 'II'")
    if m <= 0:
        raise ValueError("m must be positive")
    if n < 11:
        raise ValueError("signal construction needs n >= 11")
    if variant == "II" and n_agents < 2:
        raise ValueError("variant II needs at least 2 agents")

    streams = _spawn(seed, n_agents + 1)
    x_true = _ascending_signal(n, streams[0])
    ball_radius = 2.0 * float(np.linalg.norm(x_true))
    a_iso = isotonic_matrix(n)

    payload = []
    agents = []
    stacked = []
    for i in range(n_agents):
        rng = streams[i + 1]
        raw = rng.standard_normal((m, n))
        u, _, vt = np.linalg.svd(raw, full_matrices=False)
        sv = np.sort(rng.uniform(1.0, 3.0, min(m, n)))[::-1]
        if variant == "II" and i == n_agents - 1:
            sv[-1] = 0.0
        c_mat = u @ np.diag(sv) @ vt
        eps = rng.standard_normal(n) * 1e-3
        d_vec = c_mat @ (x_true + eps)
        payload.append({"C": c_mat, "d": d_vec})
        stacked.append(c_mat)
        agents.append(
            _lasso_agent(c_mat, d_vec, a_iso, lam / n_agents, ball_radius)
        )

    gram = sum(c.T @ c for c in stacked)
    bar_mu = max(float(np.linalg.eigvalsh(gram)[0]), 0.0)
    return Instance(
        agents=tuple(agents),
        bar_mu=bar_mu,
        family="classo",
        params={
            "n": n, "m": m, "N": n_agents, "lam": lam, "variant": variant,
            "x_true": x_true, "Delta": ball_radius, "agents": payload,
        },
        seed=int(seed),
    )


def aggregate_constants(agents, bar_mu: float | None = None) -> Instance:
    """Instance from raw agents; bar_mu defaults to the always-valid lower
    bound sum_i mu_i."""
    agents = tuple(agents)
    if bar_mu is None:
        bar_mu = float(sum(a.mu for a in agents))
    return Instance(agents=agents, bar_mu=bar_mu)


def _arr(x) -> list:
    return np.asarray(x, dtype=float).tolist()


def save_instance(instance: Instance, path) -> None:
    """Self-describing JSON container with a version header, dims, matrices
    in row-major order, and the generation seed."""
    if instance.family not in ("ellipsoid", "classo"):
        raise ValueError("only generated families serialize")
    p = instance.params
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "family": instance.family,
        "seed": instance.seed,
    }
    if instance.family == "ellipsoid":
        doc["dims"] = {"n": p["n"], "N": p["N"]}
        doc["D"] = p["D"]
        doc["x0"] = _arr(p["x0"])
        doc["agents"] = [
            {"A": _arr(a["A"]), "b": _arr(a["b"]), "c": a["c"]}
            for a in p["agents"]
        ]
    else:
        doc["dims"] = {"n": p["n"], "m": p["m"], "N": p["N"]}
        doc["lam"] = p["lam"]
        doc["variant"] = p["variant"]
        doc["x_true"] = _arr(p["x_true"])
        doc["Delta"] = p["Delta"]
        doc["agents"] = [
            {"C": _arr(a["C"]), "d": _arr(a["d"])} for a in p["agents"]
        ]
    ref = instance.reference_solution
    if ref is not None:
        doc["reference_solution"] = {
            "x_star": _arr(ref.x_star),
            "theta_star": [_arr(t) for t in ref.theta_star],
            "provenance": ref.provenance,
            "kkt_residual": ref.kkt_residual,
        }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_instance(path) -> Instance:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT_NAME:
        raise ValueError("not an instance file")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported version {doc.get('version')}")

    if doc["family"] == "ellipsoid":
        n, n_agents = doc["dims"]["n"], doc["dims"]["N"]
        x0 = np.asarray(doc["x0"])
        ball_radius = float(doc["D"])
        payload = []
        agents = []
        for rec in doc["agents"]:
            a_mat = np.asarray(rec["A"]).reshape(n, n)
            b_vec = np.asarray(rec["b"])
            c = float(rec["c"])
            payload.append({"A": a_mat, "b": b_vec, "c": c})
            agents.append(
                _quadratic_agent(a_mat, b_vec, c, x0, ball_radius, n_agents)
            )
        instance = Instance(
            agents=tuple(agents), bar_mu=1.0, family="ellipsoid",
            params={"n": n, "N": n_agents, "D": ball_radius, "x0": x0,
                    "agents": payload},
            seed=doc.get("seed"),
        )
    elif doc["family"] == "classo":
        dims = doc["dims"]
        n, m, n_agents = dims["n"], dims["m"], dims["N"]
        lam = float(doc["lam"])
        ball_radius = float(doc["Delta"])
        a_iso = isotonic_matrix(n)
        payload = []
        agents = []
        stacked = []
        for rec in doc["agents"]:
            c_mat = np.asarray(rec["C"]).reshape(m, n)
            d_vec = np.asarray(rec["d"])
            payload.append({"C": c_mat, "d": d_vec})
            stacked.append(c_mat)
            agents.append(
                _lasso_agent(c_mat, d_vec, a_iso, lam / n_agents, ball_radius)
            )
        gram = sum(c.T @ c for c in stacked)
        instance = Instance(
            agents=tuple(agents), bar_mu=max(float(np.linalg.eigvalsh(gram)[0]), 0.0),
            family="classo",
            params={"n": n, "m": m, "N": n_agents, "lam": lam,
                    "variant": doc["variant"],
                    "x_true": np.asarray(doc["x_true"]),
                    "Delta": ball_radius, "agents": payload},
            seed=doc.get("seed"),
        )
    else:
        raise ValueError(f"unknown family {doc['family']!r}")

    ref = doc.get("reference_solution")
    if ref is not None:
        instance = instance.with_reference(ReferenceSolution(
            x_star=np.asarray(ref["x_star"]),
            theta_star=tuple(np.asarray(t) for t in ref["theta_star"]),
            provenance=ref["provenance"],
            kkt_residual=float(ref["kkt_residual"]),
        ))
    return instance
