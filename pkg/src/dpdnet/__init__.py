"""Decentralized primal-dual solvers for conic-constrained consensus
optimization over static and time-varying networks, with a centralized
reference solver, invariant checkers, and an experiment CLI."""

__version__ = "0.1.0"

from .graph import (
    Graph,
    TimeVaryingGraphPlan,
    small_world,
    sample_sequence,
    incidence,
    laplacian,
    lambda2,
    twelve_node_digraph,
)
from .mixing import (
    MixingMatrix,
    metropolis_weights,
    directed_weights,
    approx_average_undirected,
    push_sum,
    exact_average,
    estimate_decay,
)
from .cones_prox import (
    Cone,
    ProxFn,
    project_cone,
    project_dual_cone,
    project_neg_cone,
    prox,
    prox_support_via_moreau,
    project_ball,
    distance_to_cone,
    distance_to_consensus,
)
from .problems import (
    AgentProblem,
    Instance,
    ReferenceSolution,
    mu_alpha_static,
    mu_alpha_dynamic,
    choose_alpha_mu,
    gen_ellipsoid_instance,
    gen_classo_instance,
    aggregate_constants,
    save_instance,
    load_instance,
)
from .schedule import (
    StepState,
    CommSchedule,
    init_static,
    init_dynamic,
    advance,
    check_static_conditions,
    check_dynamic_conditions,
    q_of,
    summability_partial,
    summability_report,
    compute_B,
)
from .central_oracle import (
    OracleSolution,
    apd_solve,
    kkt_residual,
    closed_form_ball_projection,
)
from .dpda_static import BPolicy, DpdaState, dpda_init, dpda_step, run_dpda
from .dpda_tv import (
    DpdaTvState,
    dpda_tv_init,
    dpda_tv_step,
    run_dpda_tv,
    measure_error_sequences,
)
from .metrics import (
    RunTrace,
    TraceRecord,
    relative_error,
    infeasibility,
    consensus_violation,
    theorem_gap,
    rate_fit,
    write_trace_csv,
    read_trace_csv,
)
