"""Experiment runner: solve, figure sweeps, witness series and validation.

Subcommands
-----------
solve      solve one maximum-entropy joint state and dump it
fig1       deviation bound vs number of bath spins (central spin)
fig2       deviation bound vs coupling strength (central spin)
fig3       witness batch over random Hamiltonians
witness    one distinguishability-growth series
validate   run the invariant suite and print a pass/fail table

Every run is fully determined by (config, seed): CSV outputs are
byte-identical across reruns and carry a comment line recording the
config hash and seed. Figure commands render a PNG next to each CSV
unless --no-plot is given.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import experiments, figures
from .bounds import conditional_entropy, corollary2_check, correlation_norm
from .dynamics import EvolutionSpec, witness_csv_rows, witness_delta
from .kernel import KernelError, load_operator, save_operator, trace_norm, von_neumann_entropy
from .maxent import (
    Constraint,
    ConvergenceError,
    DivergenceError,
    SolverOptions,
    assign,
    save_solution,
)
from .models import model_from_config, random_density
from .validate import run_checks

DEFAULT_SEED = 2024


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--seed", type=int, default=None, help=f"base seed (default {DEFAULT_SEED})")
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker processes for batch commands (default: machine parallelism)")
    parser.add_argument("--quick", action="store_true", help="reduced instance counts")
    parser.add_argument("--no-plot", action="store_true", help="skip PNG rendering")


def _add_solver(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol", type=float, default=None, help="constraint tolerance (default 1e-10)")
    parser.add_argument("--max-iter", type=int, default=None, help="iteration budget (default 500)")
    parser.add_argument("--damping", type=float, default=None, help="update damping (default 1.0)")
    parser.add_argument("--eigen-floor", type=float, default=None,
                        help="support floor for logarithms (default 1e-12)")


def _add_model(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", choices=["jc", "central-spin", "random", "file"],
                        help="model kind (or set it in --config)")
    parser.add_argument("--beta", type=float, default=None, help="inverse temperature (default 1.0)")
    parser.add_argument("--omega-a", type=float, default=None, help="jc: spin splitting")
    parser.add_argument("--omega", type=float, default=None, help="jc: mode frequency")
    parser.add_argument("--j", type=float, default=None, help="jc: coupling J")
    parser.add_argument("--n-max", type=int, default=None, help="jc: Fock truncation")
    parser.add_argument("--n-bath", type=int, default=None, help="central-spin: bath spins")
    parser.add_argument("--g", type=float, default=None, help="central-spin: coupling g")
    parser.add_argument("--d-s", type=int, default=None, help="random/file: system dimension")
    parser.add_argument("--d-b", type=int, default=None, help="random/file: bath dimension")
    parser.add_argument("--sb-norm", type=float, default=None,
                        help="random: trace-norm fraction of H_SB (default 0.01)")
    parser.add_argument("--h-s", default=None, help="file: system Hamiltonian matrix file")
    parser.add_argument("--h-b", default=None, help="file: bath Hamiltonian matrix file")
    parser.add_argument("--h-sb", default=None, help="file: coupling Hamiltonian matrix file")


_MODEL_KEYS = {
    "model": "model",
    "omega_a": "omega_a",
    "omega": "omega",
    "j": "j",
    "n_max": "n_max",
    "n_bath": "n_bath",
    "g": "g",
    "d_s": "d_s",
    "d_b": "d_b",
    "sb_norm": "sb_norm_fraction",
    "h_s": "h_s",
    "h_b": "h_b",
    "h_sb": "h_sb",
}


def _load_config(args) -> tuple[dict, str]:
    cfg = {}
    base_dir = "."
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        base_dir = os.path.dirname(os.path.abspath(args.config))
    return cfg, base_dir


def _resolved(args, cfg: dict, extra: dict) -> dict:
    """Merge config file, CLI flags and command defaults into one record."""
    merged = dict(cfg)
    for attr, key in _MODEL_KEYS.items():
        val = getattr(args, attr, None)
        if val is not None:
            merged[key] = val
    if getattr(args, "beta", None) is not None:
        merged["beta"] = args.beta
    merged.setdefault("beta", 1.0)
    for key, val in extra.items():
        merged.setdefault(key, val)
    merged["seed"] = args.seed if args.seed is not None else merged.get("seed", DEFAULT_SEED)
    return merged


def _solver_options(args, cfg: dict) -> SolverOptions:
    def pick(attr, key, default):
        val = getattr(args, attr, None)
        return val if val is not None else cfg.get(key, default)

    return SolverOptions(
        tol=float(pick("tol", "tol", 1e-10)),
        max_iter=int(pick("max_iter", "max_iter", 500)),
        damping=float(pick("damping", "damping", 1.0)),
        eigen_floor=float(pick("eigen_floor", "eigen_floor", 1e-12)),
    )


def _config_hash(record: dict) -> str:
    blob = json.dumps(record, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _write_csv(path, header: list[str], rows, record: dict) -> None:
    lines = [f"# config={_config_hash(record)} seed={record['seed']}", ",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _resolve_model(record: dict, base_dir: str):
    if "model" not in record:
        raise KernelError("no model specified (use --model or a config file)")
    cfg = {key: record[key] for key in record if key in {
        "model", "omega_a", "omega", "j", "j_coupling", "n_max", "n_bath", "g",
        "d_s", "d_b", "sb_norm_fraction", "seed", "h_s", "h_b", "h_sb", "beta",
    }}
    return model_from_config(cfg, base_dir)


def _workers(args) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    return max(1, os.cpu_count() or 1)


def _child_seed(seed: int, *salt: int) -> int:
    return int(np.random.SeedSequence((seed, *salt)).generate_state(1)[0])


# -- subcommands ---------------------------------------------------------------


def cmd_solve(args) -> int:
    cfg, base_dir = _load_config(args)
    record = _resolved(args, cfg, {"method": "exact"})
    if args.method is not None:
        record["method"] = args.method
    model = _resolve_model(record, base_dir)
    opts = _solver_options(args, cfg)
    seed = record["seed"]
    if args.rho_s:
        from .kernel import DensityOperator

        rho_s = DensityOperator(load_operator(args.rho_s))
    else:
        rho_s = random_density(model.layout.d_s, _child_seed(seed, 100))
    beta = float(record["beta"])
    c = Constraint(rho_s, beta, model)
    sol = assign(c, record["method"], opts)
    joint = sol.joint_state
    os.makedirs(args.out, exist_ok=True)
    save_operator(os.path.join(args.out, "rho_s.txt"), rho_s.op)
    save_solution(args.out, sol)
    from .maxent import delta_lambda as _analytic_dlam

    print(f"method               {sol.method}")
    print(f"residual             {sol.residual:.6e}")
    print(f"iterations           {sol.iterations}")
    print(f"|delta_lambda|_1     {trace_norm(sol.delta_lambda):.6e}")
    if beta > 0:
        print(f"|analytic dLambda|_1 {trace_norm(_analytic_dlam(model, beta)):.6e}")
    print(f"S(rho_ME)            {von_neumann_entropy(joint):.12f}")
    print(f"S(B|S)               {conditional_entropy(joint, model.layout):.12f}")
    print(f"correlation_norm     {correlation_norm(joint, model.layout):.6e}")
    print(f"artifacts written to {args.out}")
    return 0


def cmd_fig1(args) -> int:
    cfg, _ = _load_config(args)
    record = _resolved(args, cfg, {
        "g": 1e-3, "n_min": 1, "n_max_spins": 4 if args.quick else 8,
        "method": "perturbative",
    })
    if args.n_min is not None:
        record["n_min"] = args.n_min
    if args.n_max_spins is not None:
        record["n_max_spins"] = args.n_max_spins
    if args.method is not None:
        record["method"] = args.method
    n_values = list(range(int(record["n_min"]), int(record["n_max_spins"]) + 1))
    rows = experiments.fig1_rows(
        n_values, g=float(record["g"]), beta=float(record["beta"]),
        seed=record["seed"], method=record["method"],
    )
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "fig1.csv")
    _write_csv(csv_path, ["N", "lhs", "rhs"], rows, record)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    if not args.no_plot:
        png = os.path.join(args.out, "fig1.png")
        figures.render_fig1(rows, png)
        print(f"wrote {png}")
    ok = all(lhs <= rhs + 1e-9 for _, lhs, rhs in rows)
    print("bound satisfied on every row" if ok else "BOUND VIOLATION present")
    return 0 if ok else 1


def cmd_fig2(args) -> int:
    cfg, _ = _load_config(args)
    record = _resolved(args, cfg, {
        "n_bath": 1, "g_min": 1e-4, "g_max": 1e-1,
        "g_count": 7 if args.quick else 13, "method": "perturbative",
    })
    for attr in ("g_min", "g_max", "g_count", "method"):
        val = getattr(args, attr, None)
        if val is not None:
            record[attr] = val
    g_values = np.geomspace(float(record["g_min"]), float(record["g_max"]),
                            int(record["g_count"]))
    rows = experiments.fig2_rows(
        g_values, n_bath=int(record["n_bath"]), beta=float(record["beta"]),
        seed=record["seed"], method=record["method"],
    )
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "fig2.csv")
    _write_csv(csv_path, ["g", "lhs", "rhs"], rows, record)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    if not args.no_plot:
        png = os.path.join(args.out, "fig2.png")
        figures.render_fig2(rows, png)
        print(f"wrote {png}")
    slope = experiments.loglog_slope([r[0] for r in rows], [r[1] for r in rows])
    print(f"log-log slope of lhs vs g: {slope:.3f}")
    ok = all(lhs <= rhs + 1e-9 for _, lhs, rhs in rows)
    print("bound satisfied on every row" if ok else "BOUND VIOLATION present")
    return 0 if ok else 1


def cmd_fig3(args) -> int:
    cfg, _ = _load_config(args)
    record = _resolved(args, cfg, {
        "n_hamiltonians": 5 if args.quick else 30,
        "n_pairs": 3 if args.quick else 10,
        "n_times": 50 if args.quick else 200,
        "t_max": 20.0, "d_s": 2, "d_b": 2,
        "sb_norm_fraction": 0.01, "assignment": "perturbative",
    })
    for attr in ("n_hamiltonians", "n_pairs", "n_times", "t_max", "assignment"):
        val = getattr(args, attr, None)
        if val is not None:
            record[attr] = val
    rows, trace = experiments.fig3_batch(
        n_hamiltonians=int(record["n_hamiltonians"]),
        n_pairs=int(record["n_pairs"]),
        n_times=int(record["n_times"]),
        t_max=float(record["t_max"]),
        beta=float(record["beta"]),
        seed=record["seed"],
        d_s=int(record["d_s"]),
        d_b=int(record["d_b"]),
        sb_norm_fraction=float(record["sb_norm_fraction"]),
        assignment=record["assignment"],
        workers=_workers(args),
    )
    os.makedirs(args.out, exist_ok=True)
    summary_path = os.path.join(args.out, "fig3_summary.csv")
    _write_csv(summary_path, ["instance", "max_delta", "bound"], rows, record)
    trace_path = os.path.join(args.out, "fig3_trace.csv")
    _write_csv(trace_path, ["t", "delta", "bound", "initial_distance"],
               witness_csv_rows(trace), record)
    print(f"wrote {summary_path} ({len(rows)} rows) and {trace_path}")
    if not args.no_plot:
        png = os.path.join(args.out, "fig3.png")
        figures.render_fig3(rows, trace, png)
        print(f"wrote {png}")
    max_deltas = np.array([r[1] for r in rows])
    bounds_arr = np.array([r[2] for r in rows])
    violations = int(np.sum(max_deltas > bounds_arr + 1e-9))
    print(f"{len(rows)} series, {violations} bound violations, "
          f"median maxDelta/bound = {float(np.median(max_deltas / bounds_arr)):.4f}")
    return 0 if violations == 0 else 1


def cmd_witness(args) -> int:
    cfg, base_dir = _load_config(args)
    record = _resolved(args, cfg, {
        "model": "random", "d_s": 2, "d_b": 2, "sb_norm_fraction": 0.01,
        "t_max": 20.0, "n_times": 200, "assignment": "perturbative",
    })
    for attr in ("t_max", "n_times", "assignment"):
        val = getattr(args, attr, None)
        if val is not None:
            record[attr] = val
    seed = record["seed"]
    if record["model"] == "random" and "seed" not in cfg:
        record.setdefault("model_seed", _child_seed(seed, 200))
        record_model = dict(record, seed=record["model_seed"])
    else:
        record_model = record
    model = _resolve_model(record_model, base_dir)
    from .kernel import DensityOperator

    if args.rho_s:
        rho_a = DensityOperator(load_operator(args.rho_s))
    else:
        rho_a = random_density(model.layout.d_s, _child_seed(seed, 201))
    if args.rho_s_prime:
        rho_b = DensityOperator(load_operator(args.rho_s_prime))
    else:
        rho_b = random_density(model.layout.d_s, _child_seed(seed, 202))
    grid = np.linspace(0.0, float(record["t_max"]), int(record["n_times"]))
    spec = EvolutionSpec(model, grid, record["assignment"])
    opts = _solver_options(args, cfg)
    series = witness_delta(spec, rho_a, rho_b, float(record["beta"]), opts)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "witness.csv")
    _write_csv(csv_path, ["t", "delta", "bound", "initial_distance"],
               witness_csv_rows(series), record)
    print(f"wrote {csv_path}")
    if not args.no_plot:
        png = os.path.join(args.out, "witness.png")
        figures.render_witness(series, png)
        print(f"wrote {png}")
    report = corollary2_check(series)
    print(f"max delta {report.lhs:.6e} vs bound {report.rhs:.6e} "
          f"(slack {report.slack:.6e}) -> {'satisfied' if report.satisfied else 'VIOLATED'}")
    return 0 if report.satisfied else 1


def cmd_validate(args) -> int:
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    results = run_checks(quick=args.quick, seed=seed, workers=_workers(args))
    width = max(len(r.name) for r in results)
    failed = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}s}  {r.elapsed:7.2f}s  {r.detail}")
        if not r.passed:
            failed.append(r.name)
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        print("failing checks: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mebath",
        description="Maximum-entropy initial system-bath states: solver, "
                    "figure reproductions and validation suites.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one ME joint state and dump it")
    _add_common(p)
    _add_solver(p)
    _add_model(p)
    p.add_argument("--method", choices=["exact", "perturbative", "factorized-thermal",
                                        "factorized-uniform"], default=None)
    p.add_argument("--rho-s", default=None, help="system state matrix file (default: random)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("fig1", help="deviation bound vs bath size (central spin)")
    _add_common(p)
    _add_model(p)
    p.add_argument("--n-min", type=int, default=None)
    p.add_argument("--n-max-spins", type=int, default=None)
    p.add_argument("--method", choices=["exact", "perturbative"], default=None)
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("fig2", help="deviation bound vs coupling (central spin)")
    _add_common(p)
    _add_model(p)
    p.add_argument("--g-min", type=float, default=None)
    p.add_argument("--g-max", type=float, default=None)
    p.add_argument("--g-count", type=int, default=None)
    p.add_argument("--method", choices=["exact", "perturbative"], default=None)
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("fig3", help="witness batch over random Hamiltonians")
    _add_common(p)
    _add_model(p)
    p.add_argument("--n-hamiltonians", type=int, default=None)
    p.add_argument("--n-pairs", type=int, default=None)
    p.add_argument("--n-times", type=int, default=None)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--assignment", choices=["exact", "perturbative", "factorized-thermal",
                                            "factorized-uniform"], default=None)
    p.set_defaults(func=cmd_fig3)

    p = sub.add_parser("witness", help="one distinguishability-growth series")
    _add_common(p)
    _add_solver(p)
    _add_model(p)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--n-times", type=int, default=None)
    p.add_argument("--assignment", choices=["exact", "perturbative", "factorized-thermal",
                                            "factorized-uniform"], default=None)
    p.add_argument("--rho-s", default=None, help="first state matrix file")
    p.add_argument("--rho-s-prime", default=None, help="second state matrix file")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("validate", help="run the invariant suite")
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConvergenceError, DivergenceError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except KernelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
