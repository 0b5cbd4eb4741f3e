import math

import numpy as np
import pytest

from dpdnet.graph import small_world
from dpdnet.problems import gen_classo_instance, gen_ellipsoid_instance
from dpdnet.schedule import (
    CommSchedule,
    _b_root,
    advance,
    check_dynamic_conditions,
    check_static_conditions,
    compute_B,
    init_dynamic,
    init_static,
    q_of,
    summability_partial,
    summability_report,
)


def synthetic_instance(l_max_f=4.0, n_agents=3, affine=True, seed=0):
    if affine:
        inst = gen_classo_instance(12, 14, n_agents, 0.05, seed=seed)
    else:
        inst = gen_ellipsoid_instance(8, n_agents, 3.0, seed=seed)
    return inst


def test_init_static_hand_value():
    # L_max(f)=4, alpha=0, gamma0=1, d_max=2, delta=1, B=0 -> 1/24
    inst = gen_classo_instance(12, 14, 3, 0.05, seed=1)
    graph = small_world(3, 3, seed=0)  # triangle, d_max = 2
    st = init_static(inst, graph, gamma0=1.0, delta=1.0, B=0.0,
                     alpha=0.0, mu=inst.ubar_mu)
    expected = 1.0 / (inst.L_max_f + 2 * (2 * 1.0 * (2 * 2 + 1)))
    assert st.tilde_tau == pytest.approx(expected, rel=1e-15)
    assert st.eta == 0.0
    for kappa, agent in zip(st.kappa, inst.agents):
        assert kappa == pytest.approx(1.0 / agent.C_g ** 2)


def test_init_static_affine_b_independent():
    inst = gen_classo_instance(12, 14, 3, 0.05, seed=1)
    graph = small_world(3, 3, seed=0)
    a = init_static(inst, graph, 1.0, 1.0, B=0.0, alpha=0.0, mu=1.0)
    b = init_static(inst, graph, 1.0, 1.0, B=37.0, alpha=0.0, mu=1.0)
    assert a.tilde_tau == b.tilde_tau


def test_init_static_paper_parameterization():
    # delta = L_max(f), gamma0 = 1/(2 d_max + L_max(f)) gives
    # tilde_tau0 = 1/(L_max(f) + 4) for affine constraints
    inst = gen_classo_instance(20, 22, 10, 0.05, seed=2)
    graph = small_world(10, 45, seed=1)
    gamma0 = 1.0 / (2 * graph.max_degree + inst.L_max_f)
    st = init_static(inst, graph, gamma0, inst.L_max_f, B=0.0,
                     alpha=0.0, mu=inst.ubar_mu)
    assert st.tilde_tau == pytest.approx(1.0 / (inst.L_max_f + 4.0),
                                         rel=1e-12)


def test_init_dynamic_hand_value():
    inst = gen_classo_instance(12, 14, 3, 0.05, seed=1)
    st = init_dynamic(inst, gamma0=1.0, delta=1.0, B=0.0, alpha=0.0, mu=1.0)
    assert st.tilde_tau == pytest.approx(1.0 / (inst.L_max_f + 4.0))


def test_init_dynamic_paper_parameterization():
    inst = gen_classo_instance(20, 22, 10, 0.05, seed=2)
    st = init_dynamic(inst, gamma0=0.5, delta=1.0, B=0.0, alpha=0.0,
                      mu=inst.ubar_mu)
    assert st.tilde_tau == pytest.approx(1.0 / (inst.L_max_f + 2.0))


def test_init_rejects_bad_params():
    inst = gen_classo_instance(12, 14, 3, 0.05, seed=1)
    graph = small_world(3, 3, seed=0)
    with pytest.raises(ValueError):
        init_static(inst, graph, -1.0, 1.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        init_dynamic(inst, 1.0, 0.0, 0.0, 0.0, 1.0)


def test_advance_mu_zero_fixed_point():
    inst = gen_classo_instance(12, 14, 3, 0.05, seed=1)
    st = init_dynamic(inst, 1.0, 1.0, 0.0, 0.0, mu=0.0)
    nxt = advance(st)
    assert nxt.gamma == st.gamma
    assert nxt.tilde_tau == st.tilde_tau
    assert nxt.eta == 1.0


def raw_state(tilde_tau, gamma, mu, delta=1.0, cg=(1.0,)):
    from dpdnet.schedule import StepState
    cg_sq = tuple(c ** 2 for c in cg)
    return StepState(
        k=0, tilde_tau=tilde_tau, tau=1.0 / (1.0 / tilde_tau + mu),
        gamma=gamma, eta=0.0,
        kappa=tuple(gamma * delta / c for c in cg_sq),
        delta=delta, mu=mu, B=0.0, cg_sq=cg_sq,
    )


def test_advance_hand_value():
    st = raw_state(tilde_tau=1.0, gamma=1.0, mu=1.0)
    nxt = advance(st)
    assert nxt.gamma == pytest.approx(np.sqrt(2.0))
    assert nxt.eta == pytest.approx(1.0 / np.sqrt(2.0))
    assert nxt.tilde_tau == pytest.approx(1.0 / np.sqrt(2.0))


def test_advance_conserves_gamma_tilde_tau():
    inst = gen_classo_instance(12, 14, 3, 0.05, seed=1)
    st = init_dynamic(inst, 0.5, 1.0, 0.0, 0.0, mu=inst.ubar_mu)
    product0 = st.gamma * st.tilde_tau
    for _ in range(10_000):
        st = advance(st)
        assert abs(st.gamma * st.tilde_tau - product0) <= 1e-12 * product0
    assert st.gamma / st.gamma > 0
    # kappa stays locked to gamma * delta / C_g^2
    for kappa, c2 in zip(st.kappa, st.cg_sq):
        assert kappa == pytest.approx(st.gamma * st.delta / c2, rel=1e-12)


def test_advance_asymptotics():
    st = raw_state(tilde_tau=0.5, gamma=1.0, mu=1.0)
    snapshots = {}
    for k in range(1, 10_001):
        st = advance(st)
        if k in (5000, 10_000):
            snapshots[k] = (st.gamma / k, st.tilde_tau * k)
    g_ratio = abs(snapshots[10_000][0] - snapshots[5000][0])
    t_ratio = abs(snapshots[10_000][1] - snapshots[5000][1])
    assert g_ratio / snapshots[5000][0] < 1e-3
    assert t_ratio / snapshots[5000][1] < 1e-3


@pytest.mark.parametrize("seed", range(10))
def test_static_conditions_hold_along_rule(seed):
    inst = gen_classo_instance(12, 14, 4, 0.05, seed=seed)
    graph = small_world(4, 5, seed=seed)
    st = init_static(inst, graph, 0.3, 2.0, B=0.0, alpha=0.0,
                     mu=inst.ubar_mu)
    for _ in range(500):
        nxt = advance(st)
        for chk in check_static_conditions(st, nxt, inst, graph, 0.0):
            assert chk.satisfied, chk
        st = nxt


def test_static_conditions_flag_oversized_step():
    inst = gen_classo_instance(12, 14, 4, 0.05, seed=3)
    graph = small_world(4, 5, seed=3)
    st = init_static(inst, graph, 0.3, 2.0, B=0.0, alpha=0.0,
                     mu=inst.ubar_mu)
    object.__setattr__(st, "tilde_tau", st.tilde_tau * 2.0)
    object.__setattr__(st, "tau", 1.0 / (1.0 / st.tilde_tau + st.mu))
    failed_names = set()
    for _ in range(20):  # the momentum term needs eta > 0 to bite
        nxt = advance(st)
        for chk in check_static_conditions(st, nxt, inst, graph, 0.0):
            if not chk.satisfied:
                failed_names.add(chk.name)
        st = nxt
    assert "primal_bound" in failed_names


def test_static_conditions_mu_zero_equality_slack():
    inst = gen_classo_instance(12, 14, 4, 0.05, seed=3)
    graph = small_world(4, 5, seed=3)
    st = init_static(inst, graph, 0.3, 2.0, B=0.0, alpha=0.0, mu=0.0)
    nxt = advance(st)
    report = {c.name: c for c in check_static_conditions(st, nxt, inst,
                                                         graph, 0.0)}
    assert report["primal_telescoping"].satisfied
    assert abs(report["primal_telescoping"].slack) <= 1e-9
    assert all(c.satisfied for c in report.values())


@pytest.mark.parametrize("seed", range(10))
def test_dynamic_conditions_hold_along_rule(seed):
    inst = gen_ellipsoid_instance(8, 4, 3.0, seed=seed)
    alpha = 0.0
    st = init_dynamic(inst, 0.25, inst.C_min, B=5.0, alpha=alpha,
                      mu=inst.ubar_mu)
    for _ in range(500):
        nxt = advance(st)
        for chk in check_dynamic_conditions(st, nxt, inst, alpha):
            assert chk.satisfied, chk
        st = nxt


def test_dynamic_conditions_flag_oversized_step():
    inst = gen_ellipsoid_instance(8, 4, 3.0, seed=1)
    st = init_dynamic(inst, 0.25, inst.C_min, B=5.0, alpha=0.0,
                      mu=inst.ubar_mu)
    object.__setattr__(st, "tilde_tau", st.tilde_tau * 3.0)
    object.__setattr__(st, "tau", 1.0 / (1.0 / st.tilde_tau + st.mu))
    report = check_dynamic_conditions(st, advance(st), inst, 0.0)
    assert any(not c.satisfied for c in report)


def test_q_of_logarithmic_hand_value():
    sched = CommSchedule("logarithmic", c=0.0, varsigma=math.exp(-1.0))
    assert q_of(sched, 0) == 1
    assert q_of(sched, 1) == 4  # ceil(5 ln 2)
    qs = [q_of(sched, k) for k in range(200)]
    assert all(b >= a for a, b in zip(qs, qs[1:]))
    assert min(qs) >= 1


def test_q_of_polynomial_identity():
    sched = CommSchedule("polynomial", p=1.0)
    assert [q_of(sched, k) for k in range(5)] == [1, 2, 3, 4, 5]
    sq = CommSchedule("polynomial", p=2.0)
    assert q_of(sq, 48) == 7  # ceil(sqrt(49)) without float spill


def test_q_of_constant():
    sched = CommSchedule("constant", q=50)
    assert q_of(sched, 0) == 50
    assert q_of(sched, 1000) == 50


def test_schedule_validation():
    with pytest.raises(ValueError):
        CommSchedule("logarithmic", varsigma=1.5)
    with pytest.raises(ValueError):
        CommSchedule("polynomial", p=0.5)
    with pytest.raises(ValueError):
        CommSchedule("constant", q=0)


def test_summability_stabilizes_for_log_schedule():
    beta = 0.45
    sched = CommSchedule("logarithmic", c=3.0, varsigma=beta)
    report = summability_report(sched, beta, 1000, 2000, power=4)
    assert report["rel_change"] < 1e-6
    assert not report["diverging"]


def test_summability_diverges_for_constant_one():
    sched = CommSchedule("constant", q=1)
    report = summability_report(sched, 0.9, 1000, 2000, power=4)
    assert report["diverging"]


def test_summability_validation():
    sched = CommSchedule("constant", q=1)
    with pytest.raises(ValueError):
        summability_partial(sched, 1.5, 10)
    with pytest.raises(ValueError):
        summability_partial(sched, 0.5, 10, power=5)


def test_b_root_degenerate_form():
    # zero linear coefficient: B = theta_norm + sqrt(A0)
    assert _b_root(2.0, 0.0, 9.0) == pytest.approx(5.0)


def test_b_root_satisfies_inequality():
    rng = np.random.default_rng(0)
    for _ in range(100):
        theta, a, a0 = rng.uniform(0, 10, 3)
        b = _b_root(theta, a, a0)
        assert b >= theta + math.sqrt(a * b + a0) - 1e-9


def test_compute_b_affine_zero():
    inst = gen_classo_instance(12, 14, 3, 0.05, seed=1)
    assert compute_B(inst, 0.5, 1.0, 10.0, 3.0) == 0.0


def test_compute_b_resubstitution():
    inst = gen_ellipsoid_instance(8, 4, 3.0, seed=2)
    gamma0, delta = 0.25, inst.C_min
    theta_norm, gap = 4.0, 6.0
    b = compute_B(inst, gamma0, delta, theta_norm, gap, d_max=3, alpha=0.0)
    c_min_sq = inst.C_min ** 2
    c_max_sq = max(a.C_g for a in inst.agents) ** 2
    a_lin = 2 * gamma0 * delta * inst.L_max_G * gap ** 2 / c_min_sq
    a0 = ((4 * gamma0 * (delta + 6) + inst.L_max_f) * gamma0 * delta
          * gap ** 2 / c_min_sq + c_max_sq * theta_norm ** 2 / c_min_sq)
    assert b >= theta_norm + math.sqrt(a_lin * b + a0)
