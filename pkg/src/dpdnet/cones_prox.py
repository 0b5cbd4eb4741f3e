"""Cone projections, dual cones, proximal maps, and the support-function
prox via the Moreau decomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mixing import exact_average

__all__ = [
    "Cone",
    "ProxFn",
    "project_cone",
    "project_dual_cone",
    "project_neg_cone",
    "prox",
    "prox_support_via_moreau",
    "project_ball",
    "distance_to_cone",
    "distance_to_consensus",
]

NONNEG_ORTHANT = "nonneg_orthant"
ZERO = "zero"
SECOND_ORDER = "second_order"


@dataclass(frozen=True)
class Cone:
    """Closed convex cone of a supported kind in R^m."""

    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in (NONNEG_ORTHANT, ZERO, SECOND_ORDER):
            raise ValueError(f"unsupported cone kind {self.kind!r}")
        if self.dim < 0:
            raise ValueError("dimension must be nonnegative")
        if self.kind == SECOND_ORDER and self.dim < 1:
            raise ValueError("second-order cone needs dimension >= 1")


def _check_dim(cone: Cone, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (cone.dim,):
        raise ValueError(f"expected vector of dim {cone.dim}, got {v.shape}")
    return v


def _project_soc(v: np.ndarray) -> np.ndarray:
    """Three-case projection onto {(t, x): ||x|| <= t}."""
    t, x = v[0], v[1:]
    nx = np.linalg.norm(x)
    if nx <= t:
        return v.copy()
    if nx <= -t:
        return np.zeros_like(v)
    coef = (t + nx) / 2.0
    out = np.empty_like(v)
    out[0] = coef
    out[1:] = coef * x / nx if nx > 0 else 0.0
    return out


def project_cone(cone: Cone, v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the cone."""
    v = _check_dim(cone, v)
    if cone.kind == NONNEG_ORTHANT:
        return np.maximum(v, 0.0)
    if cone.kind == ZERO:
        return np.zeros_like(v)
    return _project_soc(v)


def project_dual_cone(cone: Cone, v: np.ndarray) -> np.ndarray:
    """Projection onto the dual cone; the orthant and second-order cones are
    self-dual, the zero cone's dual is the whole space."""
    v = _check_dim(cone, v)
    if cone.kind == ZERO:
        return v.copy()
    return project_cone(cone, v)


def project_neg_cone(cone: Cone, v: np.ndarray) -> np.ndarray:
    """Projection onto -K: P_{-K}(v) = -P_K(-v)."""
    return -project_cone(cone, -np.asarray(v, dtype=float))


L1 = "l1"
L1_PLUS_BALL = "l1_plus_ball"
ZERO_FN = "zero"
INDICATOR_BALL = "indicator_ball"


def _soft_threshold(z: np.ndarray, t: float) -> np.ndarray:
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


@dataclass(frozen=True)
class ProxFn:
    """Prox-capable convex function, one of:

    - l1(lam):                      lam * ||x||_1
    - l1_plus_ball(lam, radius):    lam * ||x||_1 + indicator(||x|| <= radius)
    - zero:                         0
    - indicator_ball(radius):       indicator(||x|| <= radius)
    """

    kind: str
    lam: float = 0.0
    radius: float = float("inf")

    def __post_init__(self):
        if self.kind not in (L1, L1_PLUS_BALL, ZERO_FN, INDICATOR_BALL):
            raise ValueError(f"unsupported prox kind {self.kind!r}")
        if self.lam < 0:
            raise ValueError("l1 weight must be nonnegative")
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    @property
    def domain_radius(self) -> float:
        if self.kind in (L1_PLUS_BALL, INDICATOR_BALL):
            return self.radius
        return float("inf")

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if self.kind in (L1_PLUS_BALL, INDICATOR_BALL):
            if np.linalg.norm(x) > self.radius * (1.0 + 1e-9):
                return float("inf")
        if self.kind in (L1, L1_PLUS_BALL):
            return float(self.lam * np.abs(x).sum())
        return 0.0

    def __call__(self, z: np.ndarray, tau: float) -> np.ndarray:
        return prox(self, z, tau)


def prox(prox_fn: ProxFn, z: np.ndarray, tau: float) -> np.ndarray:
    """prox_{tau * f}(z). Soft threshold for l1; soft threshold followed by
    radial ball projection for l1_plus_ball (exact for the origin-centered
    ball); identity for zero; ball projection for the indicator."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    z = np.asarray(z, dtype=float)
    if prox_fn.kind == ZERO_FN:
        return z.copy()
    if prox_fn.kind == L1:
        return _soft_threshold(z, tau * prox_fn.lam)
    if prox_fn.kind == INDICATOR_BALL:
        return project_ball(z, prox_fn.radius)
    shrunk = _soft_threshold(z, tau * prox_fn.lam)
    return project_ball(shrunk, prox_fn.radius)


def prox_support_via_moreau(set_projection, z: np.ndarray, gamma: float) -> np.ndarray:
    """prox_{gamma * sigma_S}(z) = z - gamma * P_S(z / gamma)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    z = np.asarray(z, dtype=float)
    return z - gamma * np.asarray(set_projection(z / gamma), dtype=float)


def project_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Radial clamp onto the origin-centered ball."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm <= radius:
        return v.copy()
    return v * (radius / norm)


def distance_to_cone(cone: Cone, v: np.ndarray) -> float:
    """Distance from v to -K, the feasibility residual of a conic constraint
    g(x) in -K."""
    v = _check_dim(cone, v)
    if cone.dim == 0:
        return 0.0
    return float(np.linalg.norm(v - project_neg_cone(cone, v)))


def distance_to_consensus(omega: np.ndarray, node_count: int) -> float:
    """||omega - exact_average(omega)||, zero exactly on consensus inputs."""
    omega = np.asarray(omega, dtype=float)
    return float(np.linalg.norm(omega - exact_average(omega, node_count)))
