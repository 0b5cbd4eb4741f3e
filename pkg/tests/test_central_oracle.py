import itertools

import numpy as np
import pytest

from dpdnet.central_oracle import (
    OracleBudgetError,
    apd_solve,
    closed_form_ball_projection,
    combined_rho,
    kkt_residual,
)
from dpdnet.cones_prox import Cone, ProxFn
from dpdnet.problems import (
    AgentProblem,
    aggregate_constants,
    gen_classo_instance,
    gen_ellipsoid_instance,
    isotonic_matrix,
)


def unconstrained_quadratic(a, scale=1.0):
    n = len(a)
    return AgentProblem(
        dim=n,
        prox_rho=ProxFn("zero"),
        f_value=lambda x: 0.5 * scale * float(np.sum((x - a) ** 2)),
        f_grad=lambda x: scale * (x - a),
        L_f=scale,
        mu=scale,
        g_value=lambda x: np.zeros(0),
        g_jacobian=lambda x: np.zeros((0, n)),
        L_g=0.0,
        C_g=1.0,
        cone=Cone("nonneg_orthant", 0),
        domain_radius=np.inf,
    )


def ball_constraint_agent(x0, cap, domain_radius, scale=1.0):
    """f = scale * ||x - x0||^2 / 2 constrained by ||x||^2 / 2 <= cap."""
    n = len(x0)
    return AgentProblem(
        dim=n,
        prox_rho=ProxFn("indicator_ball", radius=domain_radius),
        f_value=lambda x: 0.5 * scale * float(np.sum((x - x0) ** 2)),
        f_grad=lambda x: scale * (x - x0),
        L_f=scale,
        mu=scale,
        g_value=lambda x: np.array([0.5 * float(x @ x) - cap]),
        g_jacobian=lambda x: x[None, :],
        L_g=1.0,
        C_g=domain_radius,
        cone=Cone("nonneg_orthant", 1),
        domain_radius=domain_radius,
    )


def test_unconstrained_quadratic_solution():
    a = np.array([1.0, -2.0, 0.5])
    inst = aggregate_constants([unconstrained_quadratic(a)])
    sol = apd_solve(inst, tolerance=1e-9)
    assert sol.verified
    np.testing.assert_allclose(sol.x_star, a, atol=1e-7)


def test_ball_constraint_matches_closed_form():
    rng = np.random.default_rng(0)
    x0 = rng.uniform(-1, 1, 6) * 3
    cap = 1.0
    closed = closed_form_ball_projection(x0, cap)
    assert np.linalg.norm(x0) > np.sqrt(2 * cap)
    inst = aggregate_constants([ball_constraint_agent(x0, cap, 10.0)])
    sol = apd_solve(inst, tolerance=1e-9)
    np.testing.assert_allclose(sol.x_star, closed.x_star, atol=1e-6)
    np.testing.assert_allclose(
        sol.theta_star[0], closed.theta_star[0], atol=1e-6
    )


def test_closed_form_inactive_case():
    x0 = np.array([0.1, 0.2])
    sol = closed_form_ball_projection(x0, 5.0)
    np.testing.assert_array_equal(sol.x_star, x0)
    assert sol.theta_star[0][0] == 0.0


def enumerate_tiny_classo(instance):
    """Exhaustive KKT enumeration oracle for tiny isotonic LASSO instances:
    try every sign pattern of x and every active set of ordering
    constraints, solve the resulting linear system, keep consistent ones."""
    n = instance.dim
    lam_total = sum(a.prox_rho.lam for a in instance.agents)
    a_iso = isotonic_matrix(n)
    gram = sum(
        rec["C"].T @ rec["C"] for rec in instance.params["agents"]
    )
    rhs0 = sum(
        rec["C"].T @ rec["d"] for rec in instance.params["agents"]
    )
    best = None
    for signs in itertools.product((-1, 0, 1), repeat=n):
        signs = np.array(signs, dtype=float)
        free = signs != 0
        for active in itertools.chain.from_iterable(
            itertools.combinations(range(n - 1), r) for r in range(n)
        ):
            a_act = a_iso[list(active)]
            nf = int(free.sum())
            na = len(active)
            # unknowns: x_free, multipliers for active rows
            mat = np.zeros((nf + na, nf + na))
            rhs = np.zeros(nf + na)
            mat[:nf, :nf] = gram[np.ix_(free, free)]
            if na:
                mat[:nf, nf:] = a_act[:, free].T
                mat[nf:, :nf] = a_act[:, free]
                rhs[nf:] = 0.0
            rhs[:nf] = rhs0[free] - lam_total * signs[free]
            try:
                sol = np.linalg.solve(mat, rhs)
            except np.linalg.LinAlgError:
                continue
            x = np.zeros(n)
            x[free] = sol[:nf]
            mult = sol[nf:]
            if np.any(np.sign(x[free]) != signs[free]):
                continue
            if np.any(mult < -1e-10):
                continue
            # zero components need |gradient| <= lam, inactive rows A x < 0
            grad = gram @ x - rhs0
            if na:
                grad = grad + a_act.T @ mult
            if np.any(np.abs(grad[~free]) > lam_total * (1 + 1e-9)):
                continue
            ax = a_iso @ x
            inact = np.setdiff1d(np.arange(n - 1), np.array(active, int))
            if inact.size and np.any(ax[inact] > 1e-10):
                continue
            val = 0.5 * float(x @ (gram @ x)) - float(rhs0 @ x) \
                + lam_total * np.abs(x).sum()
            if best is None or val < best[0]:
                best = (val, x)
    return best[1]


def test_tiny_classo_matches_enumeration():
    inst = gen_classo_instance(12, 13, 2, 0.4, seed=21)
    # shrink to n = 4 by hand so enumeration stays exhaustive
    n = 4
    rng = np.random.default_rng(5)
    recs = []
    agents = []
    from dpdnet.problems import _lasso_agent  # test hooks into the builder

    a_iso = isotonic_matrix(n)
    for _ in range(2):
        c = rng.standard_normal((6, n))
        u, _, vt = np.linalg.svd(c, full_matrices=False)
        c = u @ np.diag(rng.uniform(1, 3, n)) @ vt
        d = c @ rng.uniform(-1, 1, n)
        recs.append({"C": c, "d": d})
        agents.append(_lasso_agent(c, d, a_iso, lam_over_n=0.2,
                                   ball_radius=50.0))
    gram = sum(r["C"].T @ r["C"] for r in recs)
    inst = aggregate_constants(agents,
                               bar_mu=float(np.linalg.eigvalsh(gram)[0]))
    object.__setattr__(inst, "family", "classo")
    object.__setattr__(inst, "params", {"agents": recs})

    x_enum = enumerate_tiny_classo(inst)
    sol = apd_solve(inst, tolerance=1e-9)
    np.testing.assert_allclose(sol.x_star, x_enum, atol=1e-8)


def test_kkt_residual_closed_form_zero():
    x0 = np.array([2.0, 1.0, -2.0])
    closed = closed_form_ball_projection(x0, 1.0)
    inst = aggregate_constants([ball_constraint_agent(x0, 1.0, 10.0)])
    res = kkt_residual(inst, closed.x_star, closed.theta_star)
    assert res <= 1e-8


def test_kkt_residual_positive_off_solution():
    x0 = np.array([2.0, 1.0, -2.0])
    inst = aggregate_constants([ball_constraint_agent(x0, 1.0, 10.0)])
    res = kkt_residual(inst, x0 * 3.0, [np.array([0.0])])
    assert res > 0.1


def test_oracle_determinism():
    inst = gen_classo_instance(12, 14, 3, 0.05, seed=8)
    s1 = apd_solve(inst, tolerance=1e-8)
    s2 = apd_solve(inst, tolerance=1e-8)
    np.testing.assert_array_equal(s1.x_star, s2.x_star)


def test_oracle_scaling_homogeneity():
    # scaling the objective by c keeps x* and scales theta* by c
    x0 = np.array([3.0, 0.5, -1.0, 2.0])
    cap = 0.8
    base = aggregate_constants([ball_constraint_agent(x0, cap, 10.0)])
    scaled = aggregate_constants(
        [ball_constraint_agent(x0, cap, 10.0, scale=3.0)]
    )
    s_base = apd_solve(base, tolerance=1e-9)
    s_scaled = apd_solve(scaled, tolerance=1e-9)
    np.testing.assert_allclose(s_scaled.x_star, s_base.x_star, atol=1e-6)
    np.testing.assert_allclose(
        s_scaled.theta_star[0], 3.0 * s_base.theta_star[0], rtol=1e-5,
        atol=1e-6,
    )


def test_oracle_budget_error_carries_best():
    inst = gen_classo_instance(20, 22, 10, 0.05, seed=1)
    with pytest.raises(OracleBudgetError) as err:
        apd_solve(inst, tolerance=1e-13, max_iters=60, polish=False)
    assert err.value.best.kkt_residual > 0
    assert not err.value.best.verified


def test_combined_rho_merges_l1_weights():
    inst = gen_classo_instance(12, 14, 4, 0.2, seed=3)
    rho = combined_rho(inst)
    assert rho.lam == pytest.approx(0.2)
    assert rho.kind == "l1_plus_ball"


def test_ellipsoid_oracle_feasible_and_verified():
    inst = gen_ellipsoid_instance(8, 4, 3.0, seed=6)
    sol = apd_solve(inst, tolerance=1e-8)
    assert sol.verified
    for agent in inst.agents:
        assert agent.g_value(sol.x_star)[0] <= 1e-7
    assert np.linalg.norm(sol.x_star) <= 3.0 + 1e-9
