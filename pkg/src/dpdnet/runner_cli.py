"""Command-line front end: instance generation, experiment execution,
invariant auditing, mixing-decay estimation, and trace reporting.

Configuration is a flat key=value file with INI sections ([instance],
[network], [algorithm], [schedule], [run], [output]); command-line flags
override file values. Every resolved setting is echoed into a sidecar JSON
next to the trace so runs are reproducible from their outputs alone.

Exit codes: 0 success, 2 validation failure, 3 numerical abort,
4 audit failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .central_oracle import OracleBudgetError, apd_solve
from .dpda_static import BPolicy, NumericalAbort, run_dpda
from .dpda_tv import InvariantViolation, run_dpda_tv
from .graph import (
    Graph,
    TimeVaryingGraphPlan,
    load_graph,
    small_world,
    twelve_node_digraph,
)
from .metrics import RunTrace, read_trace_csv, write_trace_csv
from .mixing import estimate_decay
from .problems import (
    Instance,
    gen_classo_instance,
    gen_ellipsoid_instance,
    load_instance,
    save_instance,
)
from .schedule import CommSchedule, check_static_conditions, q_of

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_AUDIT = 4


@dataclass
class ExperimentConfig:
    # instance
    family: str = "classo1"            # ellipsoid | classo1 | classo2
    n: int = 20
    m: int = 22
    agents: int = 10
    radius: float = 5.0
    lam: float = 0.05
    instance_seed: int = 1
    instance_file: str = ""
    with_oracle: bool = True
    oracle_tol: float = 1e-9
    oracle_max_iters: int = 200_000
    # network
    topology: str = "static"           # static | tv
    graph: str = "small_world:10,45,1"  # generator spec or file:PATH
    mixing: str = "auto"               # metropolis | directed_pushsum | auto
    window: int = 5
    fraction: float = 0.8
    network_seed: int = 1
    base_at_zero: bool = True
    # algorithm
    algorithm: str = "dpda"            # dpda | dpda_tv | oracle
    gamma0: str = "auto"
    delta: str = "auto"
    b_policy: str = "auto"             # auto | affine | oracle | user:VALUE
    safety_factor: float = 1.025
    averaging: str = "inexact"         # inexact | exact
    # schedule
    schedule_kind: str = "logarithmic"  # logarithmic | polynomial | constant
    schedule_c: float = 0.0
    schedule_varsigma: float = float(np.exp(-1.0))
    schedule_p: float = 1.0
    schedule_q: int = 1
    # run
    iterations: int = 1000
    stride: int = 1
    exact_shadow: bool = False
    check_conditions: bool = False
    # output
    output: str = "trace.csv"
    figures: bool = False
    snapshots: bool = True


PRESETS = {
    "ellipsoid-static": {
        "family": "ellipsoid", "n": 20, "agents": 12, "radius": 5.0,
        "topology": "static", "graph": "small_world:12,24,1",
        "algorithm": "dpda", "iterations": 1000,
    },
    "ellipsoid-tv-directed": {
        "family": "ellipsoid", "n": 20, "agents": 12, "radius": 5.0,
        "topology": "tv", "graph": "twelve_node_digraph",
        "mixing": "directed_pushsum", "algorithm": "dpda_tv",
        "schedule_kind": "logarithmic", "schedule_c": 0.0,
        "iterations": 500,
    },
    "classo1-static": {
        "family": "classo1", "n": 20, "m": 22, "agents": 10, "lam": 0.05,
        "topology": "static", "graph": "small_world:10,45,1",
        "algorithm": "dpda", "iterations": 2000,
    },
    "classo2-tv-undirected": {
        "family": "classo2", "n": 20, "m": 22, "agents": 10, "lam": 0.05,
        "topology": "tv", "graph": "small_world:10,45,1",
        "mixing": "metropolis", "algorithm": "dpda_tv",
        "schedule_kind": "logarithmic", "schedule_c": 5.0,
        "iterations": 1000,
    },
}

_SECTION_FIELDS = {
    "instance": ["family", "n", "m", "agents", "radius", "lam",
                 "instance_seed", "instance_file", "with_oracle",
                 "oracle_tol", "oracle_max_iters"],
    "network": ["topology", "graph", "mixing", "window", "fraction",
                "network_seed", "base_at_zero"],
    "algorithm": ["algorithm", "gamma0", "delta", "b_policy",
                  "safety_factor", "averaging"],
    "schedule": ["schedule_kind", "schedule_c", "schedule_varsigma",
                 "schedule_p", "schedule_q"],
    "run": ["iterations", "stride", "exact_shadow", "check_conditions"],
    "output": ["output", "figures", "snapshots"],
}


def _coerce(value: str, template):
    if isinstance(template, bool):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(template, int):
        return int(value)
    if isinstance(template, float):
        return float(value)
    return value


def load_config_file(path) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"cannot read config file {path}")
    defaults = ExperimentConfig()
    out = {}
    for section, keys in _SECTION_FIELDS.items():
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            if key not in keys:
                raise ValueError(f"unknown key {key!r} in [{section}]")
            out[key] = _coerce(raw, getattr(defaults, key))
    return out


def build_config(preset: str | None, file_path: str | None,
                 overrides: dict) -> ExperimentConfig:
    values = {}
    if preset:
        if preset not in PRESETS:
            raise ValueError(
                f"unknown preset {preset!r}; choices: {sorted(PRESETS)}"
            )
        values.update(PRESETS[preset])
    if file_path:
        values.update(load_config_file(file_path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def resolve_instance(cfg: ExperimentConfig) -> Instance:
    if cfg.instance_file:
        return load_instance(cfg.instance_file)
    if cfg.family == "ellipsoid":
        inst = gen_ellipsoid_instance(cfg.n, cfg.agents, cfg.radius,
                                      cfg.instance_seed)
    elif cfg.family in ("classo1", "classo2"):
        variant = "I" if cfg.family == "classo1" else "II"
        inst = gen_classo_instance(cfg.n, cfg.m, cfg.agents, cfg.lam,
                                   cfg.instance_seed, variant=variant)
    else:
        raise ValueError(f"unknown family {cfg.family!r}")
    if cfg.with_oracle:
        sol = apd_solve(inst, tolerance=cfg.oracle_tol,
                        max_iters=cfg.oracle_max_iters)
        inst = inst.with_reference(sol.as_reference())
    return inst


def resolve_graph(cfg: ExperimentConfig) -> Graph:
    spec = cfg.graph
    if spec.startswith("file:"):
        return load_graph(spec[len("file:"):])
    if spec == "twelve_node_digraph":
        return twelve_node_digraph()
    if spec.startswith("small_world:"):
        parts = spec[len("small_world:"):].split(",")
        if len(parts) != 3:
            raise ValueError("small_world spec is small_world:N,E,seed")
        return small_world(int(parts[0]), int(parts[1]), int(parts[2]))
    raise ValueError(f"unknown graph spec {spec!r}")


def resolve_network(cfg: ExperimentConfig):
    base = resolve_graph(cfg)
    if cfg.topology == "static":
        return base
    if cfg.topology == "tv":
        return TimeVaryingGraphPlan(
            base, cfg.window, cfg.fraction, cfg.network_seed,
            base_at_zero=cfg.base_at_zero,
        )
    raise ValueError(f"unknown topology {cfg.topology!r}")


def resolve_b_policy(cfg: ExperimentConfig, instance: Instance) -> BPolicy:
    spec = cfg.b_policy
    if spec == "auto":
        return BPolicy("affine_zero" if instance.L_max_G == 0 else "oracle")
    if spec == "affine":
        return BPolicy("affine_zero")
    if spec == "oracle":
        return BPolicy("oracle")
    if spec.startswith("user:"):
        return BPolicy("user", float(spec[len("user:"):]))
    raise ValueError(f"unknown B policy {spec!r}")


def resolve_schedule(cfg: ExperimentConfig) -> CommSchedule:
    if cfg.schedule_kind == "logarithmic":
        return CommSchedule("logarithmic", c=cfg.schedule_c,
                            varsigma=cfg.schedule_varsigma)
    if cfg.schedule_kind == "polynomial":
        return CommSchedule("polynomial", p=cfg.schedule_p)
    if cfg.schedule_kind == "constant":
        return CommSchedule("constant", q=cfg.schedule_q)
    raise ValueError(f"unknown schedule kind {cfg.schedule_kind!r}")


def _steps(cfg: ExperimentConfig):
    gamma0 = None if cfg.gamma0 == "auto" else float(cfg.gamma0)
    delta = None if cfg.delta == "auto" else float(cfg.delta)
    return gamma0, delta


def cmd_generate(cfg: ExperimentConfig, out_path: str) -> int:
    instance = resolve_instance(cfg)
    save_instance(instance, out_path)
    print(f"wrote {out_path}")
    print(f"  family={instance.family} N={instance.node_count} "
          f"n={instance.dim} m={instance.constraint_dim}")
    print(f"  bar_mu={instance.bar_mu:.6g} bar_L={instance.bar_L:.6g} "
          f"L_max_f={instance.L_max_f:.6g} L_max_G={instance.L_max_G:.6g}")
    print(f"  C_min={instance.C_min:.6g} ubar_mu={instance.ubar_mu:.6g} "
          f"Delta={instance.Delta:.6g}")
    ref = instance.reference_solution
    if ref is not None:
        print(f"  reference: {ref.provenance} "
              f"kkt={ref.kkt_residual:.3e} theta_norm={ref.theta_norm:.6g}")
    return EXIT_OK


def _write_sidecar(cfg: ExperimentConfig, trace: RunTrace,
                   wall_time: float) -> None:
    meta = {
        "library_version": __version__,
        "wall_time_s": wall_time,
        "config": asdict(cfg),
        "trace_metadata": {
            k: (v if not isinstance(v, np.floating) else float(v))
            for k, v in trace.metadata.items()
            if isinstance(v, (int, float, str, bool, type(None), np.floating))
        },
    }
    with open(cfg.output + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=1, default=float)
        fh.write("\n")


def _write_snapshots(cfg: ExperimentConfig, trace: RunTrace) -> None:
    if not trace.records or trace.records[0].x_last is None:
        return
    np.savez_compressed(
        cfg.output + ".snapshots.npz",
        ks=np.array([r.k for r in trace.records]),
        x_last=np.array([r.x_last for r in trace.records]),
        x_ergodic=np.array([r.x_ergodic for r in trace.records]),
    )


def cmd_run(cfg: ExperimentConfig) -> int:
    instance = resolve_instance(cfg)
    network = resolve_network(cfg)
    gamma0, delta = _steps(cfg)
    started = time.time()

    if cfg.algorithm == "oracle":
        sol = apd_solve(instance, tolerance=cfg.oracle_tol,
                        max_iters=cfg.oracle_max_iters)
        print(f"oracle: kkt={sol.kkt_residual:.3e} "
              f"iters={sol.iterations_used}")
        print("x_star:", np.array2string(sol.x_star, precision=8))
        return EXIT_OK

    if cfg.algorithm == "dpda":
        if not isinstance(network, Graph):
            raise ValueError("dpda needs a static network")
        trace = run_dpda(
            instance, network, cfg.iterations, gamma0=gamma0, delta=delta,
            b_policy=resolve_b_policy(cfg, instance), stride=cfg.stride,
            check_conditions=cfg.check_conditions,
            safety_factor=cfg.safety_factor,
        )
    elif cfg.algorithm == "dpda_tv":
        if not isinstance(network, TimeVaryingGraphPlan):
            raise ValueError("dpda_tv needs a time-varying plan")
        mixing = None if cfg.mixing == "auto" else cfg.mixing
        trace = run_dpda_tv(
            instance, network, cfg.iterations, mixing_kind=mixing,
            gamma0=gamma0, delta=delta,
            b_policy=resolve_b_policy(cfg, instance),
            schedule=resolve_schedule(cfg), averaging_mode=cfg.averaging,
            exact_shadow=cfg.exact_shadow, stride=cfg.stride,
            check_conditions=cfg.check_conditions,
            safety_factor=cfg.safety_factor,
        )
    else:
        raise ValueError(f"unknown algorithm {cfg.algorithm!r}")

    wall = time.time() - started
    write_trace_csv(trace, cfg.output)
    _write_sidecar(cfg, trace, wall)
    if cfg.snapshots:
        _write_snapshots(cfg, trace)
    last = trace.records[-1]
    print(f"wrote {cfg.output} ({len(trace.records)} records, "
          f"{wall:.1f}s)")
    summary = {k: last.values[k] for k in
               ("rel_err_last", "infeas_ergodic", "subopt_ergodic")
               if k in last.values}
    print(f"  final k={last.k} t_k={last.t_k} " + " ".join(
        f"{k}={v:.3e}" for k, v in summary.items()
    ))
    if cfg.figures:
        from .report import render_trace_figures

        for path in render_trace_figures(cfg.output):
            print(f"wrote {path}")
    if cfg.check_conditions and trace.metadata["condition_failures"] > 0:
        print(f"step-condition failures: "
              f"{trace.metadata['condition_failures']}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def audit_trace(trace: RunTrace, instance: Instance, meta: dict,
                snapshots=None) -> dict[str, str]:
    """Offline re-verification of the recorded invariants. Returns a map
    from check name to 'pass', 'fail: <detail>', or 'skipped: <reason>'."""
    results: dict[str, str] = {}
    cfg = meta["config"]
    tmeta = meta["trace_metadata"]
    gamma0 = tmeta["gamma0"]
    tilde_tau0 = tmeta["tilde_tau0"]
    mu = tmeta["mu"]

    product0 = gamma0 * tilde_tau0
    gammas = trace.column("gamma")
    tts = trace.column("tilde_tau")
    drift = np.nanmax(np.abs(gammas * tts - product0))
    results["gamma*tilde_tau conservation"] = (
        "pass" if drift <= 1e-10 * product0 else f"fail: drift {drift:.3e}"
    )

    # recompute the deterministic schedule and compare recorded columns
    g, tt = gamma0, tilde_tau0
    expected = {}
    for k in range(1, trace.records[-1].k + 1):
        expected[k] = (g, tt)
        g_next = g * np.sqrt(1.0 + mu * tt)
        tt = tt * g / g_next
        g = g_next
    results["schedule columns"] = "pass"
    for rec in trace.records:
        eg, ett = expected[rec.k]
        if (abs(rec.values["gamma"] - eg) > 1e-9 * eg
                or abs(rec.values["tilde_tau"] - ett) > 1e-9 * ett):
            results["schedule columns"] = f"fail: mismatch at k={rec.k}"
            break

    results["metric nonnegativity"] = "pass"
    for col in ("rel_err_last", "rel_err_ergodic", "infeas_last",
                "infeas_ergodic", "consensus_viol", "subopt_ergodic",
                "theorem_gap", "theta_norm", "nu_norm"):
        vals = trace.column(col)
        if np.any(vals[~np.isnan(vals)] < 0):
            results["metric nonnegativity"] = f"fail: negative {col}"
            break

    if tmeta["algorithm"] == "dpda_tv":
        bound_coef = 3.0 * np.sqrt(instance.node_count) * instance.Delta
        gsum, running = 0.0, {}
        for k in range(1, trace.records[-1].k + 1):
            gsum += expected[k][0]
            running[k] = gsum
        results["nu bound"] = "pass"
        for rec in trace.records:
            nu = rec.values.get("nu_norm")
            if nu is not None and nu > bound_coef * running[rec.k] * (
                1 + 1e-9
            ):
                results["nu bound"] = f"fail: violated at k={rec.k}"
                break

        if tmeta.get("averaging_mode") == "exact" and tmeta.get(
            "exact_shadow"
        ):
            bad = any(
                np.any(np.abs(trace.column(col)[
                    ~np.isnan(trace.column(col))
                ]) > 0)
                for col in ("e1", "e2", "e3")
            )
            results["exact-mode error columns"] = (
                "fail: nonzero error sequence" if bad else "pass"
            )

        b_val = tmeta.get("B", 0.0)
        if instance.L_max_G > 0 and b_val > 0:
            worst = np.nanmax(trace.column("theta_norm"))
            results["theta bound"] = (
                "pass" if worst <= b_val * (1 + 1e-9)
                else f"fail: {worst:.4g} > B={b_val:.4g}"
            )
    else:
        # step conditions along the recomputed schedule
        from .schedule import StepState, advance

        graph = resolve_graph(ExperimentConfig(**cfg))
        cg_sq = tuple(a.C_g ** 2 for a in instance.agents)
        delta_val = tmeta["delta"]
        st = StepState(
            k=0, tilde_tau=tilde_tau0,
            tau=1.0 / (1.0 / tilde_tau0 + mu), gamma=gamma0, eta=0.0,
            kappa=tuple(gamma0 * delta_val / c for c in cg_sq),
            delta=delta_val, mu=mu, B=tmeta.get("B", 0.0), cg_sq=cg_sq,
        )
        alpha = tmeta.get("alpha", 0.0)
        results["step conditions"] = "pass"
        for _ in range(min(trace.records[-1].k, 2000)):
            nxt = advance(st)
            bad = [c for c in check_static_conditions(st, nxt, instance,
                                                      graph, alpha)
                   if not c.satisfied]
            if bad:
                results["step conditions"] = (
                    f"fail: {bad[0].name} at k={st.k}"
                )
                break
            st = nxt

    if snapshots is not None and tmeta.get("stride") == 1:
        ks = snapshots["ks"]
        x_last = snapshots["x_last"]
        weights = np.array([expected[int(k)][0] / gamma0 for k in ks])
        recomputed = (
            np.tensordot(weights, x_last, axes=(0, 0)) / weights.sum()
        )
        gap = np.abs(recomputed - snapshots["x_ergodic"][-1]).max()
        results["ergodic recomputation"] = (
            "pass" if gap <= 1e-10 * max(1.0, np.abs(recomputed).max())
            else f"fail: gap {gap:.3e}"
        )
    else:
        results["ergodic recomputation"] = "skipped: needs stride-1 snapshots"
    return results


def cmd_audit(trace_path: str, instance_path: str) -> int:
    trace = read_trace_csv(trace_path)
    instance = load_instance(instance_path)
    with open(trace_path + ".meta.json") as fh:
        meta = json.load(fh)
    snapshots = None
    try:
        snapshots = np.load(trace_path + ".snapshots.npz")
    except FileNotFoundError:
        pass

    results = audit_trace(trace, instance, meta, snapshots)
    failures = 0
    for name, verdict in results.items():
        print(f"{'FAIL' if verdict.startswith('fail') else 'ok  '} "
              f"{name}: {verdict}")
        failures += verdict.startswith("fail")
    print(f"audit: {failures} failure(s)")
    return EXIT_AUDIT if failures else EXIT_OK


def cmd_estimate_beta(cfg: ExperimentConfig, q_max: int, trials: int,
                      seed: int) -> int:
    network = resolve_network(cfg)
    if isinstance(network, Graph):
        network = TimeVaryingGraphPlan(network, 1, 1.0, seed,
                                       base_at_zero=False)
    kind = cfg.mixing
    if kind == "auto":
        kind = ("directed_pushsum" if network.base.directed
                else "metropolis")
    gamma, beta = estimate_decay(network, kind, q_max, trials, seed)
    print(f"Gamma={gamma:.6g} beta={beta:.6g}")
    print(f"suggested varsigma >= {beta:.6g}; "
          f"q_1..q_5 at (5+c)=5: "
          + " ".join(str(q_of(CommSchedule('logarithmic', c=0.0,
                                           varsigma=max(beta, 1e-3)), k))
                     for k in range(1, 6)))
    return EXIT_OK


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--family", default=None,
                   choices=["ellipsoid", "classo1", "classo2"])
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--agents", type=int, default=None)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--instance-seed", type=int, default=None,
                   dest="instance_seed")
    p.add_argument("--instance-file", default=None, dest="instance_file")
    p.add_argument("--no-oracle", action="store_const", const=False,
                   default=None, dest="with_oracle")
    p.add_argument("--oracle-tol", type=float, default=None,
                   dest="oracle_tol")
    p.add_argument("--oracle-max-iters", type=int, default=None,
                   dest="oracle_max_iters")
    p.add_argument("--topology", choices=["static", "tv"], default=None)
    p.add_argument("--graph", default=None)
    p.add_argument("--mixing", default=None,
                   choices=["auto", "metropolis", "directed_pushsum"])
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--fraction", type=float, default=None)
    p.add_argument("--network-seed", type=int, default=None,
                   dest="network_seed")
    p.add_argument("--algorithm", default=None,
                   choices=["dpda", "dpda_tv", "oracle"])
    p.add_argument("--gamma0", default=None)
    p.add_argument("--delta", default=None)
    p.add_argument("--b-policy", default=None, dest="b_policy")
    p.add_argument("--safety-factor", type=float, default=None,
                   dest="safety_factor")
    p.add_argument("--averaging", choices=["inexact", "exact"], default=None)
    p.add_argument("--schedule-kind", default=None, dest="schedule_kind",
                   choices=["logarithmic", "polynomial", "constant"])
    p.add_argument("--schedule-c", type=float, default=None,
                   dest="schedule_c")
    p.add_argument("--schedule-varsigma", type=float, default=None,
                   dest="schedule_varsigma")
    p.add_argument("--schedule-p", type=float, default=None,
                   dest="schedule_p")
    p.add_argument("--schedule-q", type=int, default=None, dest="schedule_q")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--exact-shadow", action="store_const", const=True,
                   default=None, dest="exact_shadow")
    p.add_argument("--check-conditions", action="store_const", const=True,
                   default=None, dest="check_conditions")
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--figures", action="store_const", const=True,
                   default=None)
    p.add_argument("--no-snapshots", action="store_const", const=False,
                   default=None, dest="snapshots")


_CONFIG_KEYS = set(ExperimentConfig.__dataclass_fields__)


def _config_from_args(args) -> ExperimentConfig:
    overrides = {
        k: v for k, v in vars(args).items()
        if k in _CONFIG_KEYS and v is not None
    }
    return build_config(args.preset, args.config, overrides)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dpdnet",
        description="decentralized primal-dual experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write an instance file")
    _add_config_args(p_gen)

    p_run = sub.add_parser("run", help="run an algorithm, write a trace CSV")
    _add_config_args(p_run)

    p_audit = sub.add_parser("audit", help="re-verify a recorded trace")
    p_audit.add_argument("--trace", required=True)
    p_audit.add_argument("--instance", required=True)

    p_beta = sub.add_parser("estimate-beta",
                            help="fit the mixing decay envelope")
    _add_config_args(p_beta)
    p_beta.add_argument("--q-max", type=int, default=20, dest="q_max")
    p_beta.add_argument("--trials", type=int, default=8)
    p_beta.add_argument("--seed", type=int, default=0)

    p_rep = sub.add_parser("report", help="render figures from a trace CSV")
    p_rep.add_argument("--trace", required=True)
    p_rep.add_argument("--out-dir", default=None, dest="out_dir")

    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            cfg = _config_from_args(args)
            out = args.output or "instance.json"
            return cmd_generate(cfg, out)
        if args.command == "run":
            cfg = _config_from_args(args)
            return cmd_run(cfg)
        if args.command == "audit":
            return cmd_audit(args.trace, args.instance)
        if args.command == "estimate-beta":
            cfg = _config_from_args(args)
            return cmd_estimate_beta(cfg, args.q_max, args.trials, args.seed)
        if args.command == "report":
            from .report import render_trace_figures

            for path in render_trace_figures(args.trace, args.out_dir):
                print(f"wrote {path}")
            return EXIT_OK
    except (ValueError, FileNotFoundError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalAbort, InvariantViolation, OracleBudgetError,
            FloatingPointError) as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
