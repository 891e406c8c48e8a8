"""Reproducible experiment batches behind the CLI figure and validation commands.

Every batch is fully determined by a base seed: per-instance generators
are derived from (seed, index) so results are independent of scheduling,
and instance lists can be sharded across a process pool without changing
the output. Rows are returned in instance order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import BoundReport, corollary1_check
from .dynamics import EvolutionSpec, WitnessSeries, witness_delta
from .kernel import trace_norm
from .maxent import Constraint, SolverOptions, assignment_perturbative, solve_exact
from .models import (
    CentralSpinParams,
    build_central_spin,
    build_random_model,
    random_density,
    random_density_from,
)


def _child_seed(seed: int, *salt: int) -> int:
    return int(np.random.SeedSequence((seed, *salt)).generate_state(1)[0])


def _pmap(func, tasks, workers: int):
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks, chunksize=chunk))


# -- figure 1 / figure 2 sweeps (central spin, deviation bound) -----------------


def fig1_rows(
    n_values,
    g: float = 1e-3,
    beta: float = 1.0,
    seed: int = 2024,
    method: str = "perturbative",
) -> list[tuple]:
    """(N, lhs, rhs) of the deviation bound versus bath size.

    The system state is one random qubit state drawn from the seed and
    reused for every N.
    """
    rho_s = random_density(2, _child_seed(seed, 1))
    rows = []
    for n in n_values:
        model = build_central_spin(CentralSpinParams(n_bath=int(n), g=g))
        report = corollary1_check(
            Constraint(rho_s, beta, model), method, instance=f"N={n}"
        )
        rows.append((int(n), report.lhs, report.rhs))
    return rows


def fig2_rows(
    g_values,
    n_bath: int = 1,
    beta: float = 1.0,
    seed: int = 2024,
    method: str = "perturbative",
) -> list[tuple]:
    """(g, lhs, rhs) of the deviation bound versus coupling strength."""
    rho_s = random_density(2, _child_seed(seed, 2))
    rows = []
    for g in g_values:
        model = build_central_spin(CentralSpinParams(n_bath=n_bath, g=float(g)))
        report = corollary1_check(
            Constraint(rho_s, beta, model), method, instance=f"g={g}"
        )
        rows.append((float(g), report.lhs, report.rhs))
    return rows


# -- figure 3 batch (random Hamiltonians, witness series) ------------------------


@dataclass(frozen=True)
class Fig3Task:
    seed: int
    index: int
    n_pairs: int
    n_times: int
    t_max: float
    beta: float
    d_s: int
    d_b: int
    sb_norm_fraction: float
    assignment: str
    keep_trace: bool


def _fig3_instance(task: Fig3Task):
    model = build_random_model(
        task.d_s, task.d_b, task.sb_norm_fraction, _child_seed(task.seed, 3, task.index)
    )
    grid = np.linspace(0.0, task.t_max, task.n_times)
    spec = EvolutionSpec(model, grid, task.assignment)
    rng = np.random.default_rng(np.random.SeedSequence((task.seed, 4, task.index)))
    rows = []
    trace = None
    for pair in range(task.n_pairs):
        rho_a = random_density_from(rng, task.d_s)
        rho_b = random_density_from(rng, task.d_s)
        series = witness_delta(spec, rho_a, rho_b, task.beta)
        rows.append(
            (f"h{task.index:04d}-p{pair:02d}", series.max_delta, series.bound)
        )
        if trace is None and task.keep_trace:
            trace = series
    return rows, trace


def fig3_batch(
    n_hamiltonians: int = 30,
    n_pairs: int = 10,
    n_times: int = 200,
    t_max: float = 20.0,
    beta: float = 1.0,
    seed: int = 2024,
    d_s: int = 2,
    d_b: int = 2,
    sb_norm_fraction: float = 0.01,
    assignment: str = "perturbative",
    workers: int = 1,
) -> tuple[list[tuple], WitnessSeries]:
    """Witness batch over random Hamiltonians and state pairs.

    Returns (rows, first_trace) where rows are
    (instance, max_delta, bound) and first_trace is the full series of
    the first instance's first pair.
    """
    tasks = [
        Fig3Task(
            seed=seed,
            index=i,
            n_pairs=n_pairs,
            n_times=n_times,
            t_max=t_max,
            beta=beta,
            d_s=d_s,
            d_b=d_b,
            sb_norm_fraction=sb_norm_fraction,
            assignment=assignment,
            keep_trace=(i == 0),
        )
        for i in range(n_hamiltonians)
    ]
    results = _pmap(_fig3_instance, tasks, workers)
    rows = [row for chunk, _ in results for row in chunk]
    first_trace = results[0][1]
    return rows, first_trace


# -- randomized deviation-bound suite --------------------------------------------


@dataclass(frozen=True)
class BoundSuiteTask:
    seed: int
    index: int
    beta_range: tuple[float, float]
    frac_range: tuple[float, float]
    method: str


def _loguniform(rng, lo: float, hi: float) -> float:
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def _bound_suite_instance(task: BoundSuiteTask) -> BoundReport:
    rng = np.random.default_rng(np.random.SeedSequence((task.seed, 5, task.index)))
    d_s = int(rng.integers(2, 5))
    d_b = int(rng.integers(2, 6))
    beta = _loguniform(rng, *task.beta_range)
    frac = _loguniform(rng, *task.frac_range)
    model = build_random_model(d_s, d_b, frac, int(rng.integers(2**62)))
    rho_s = random_density_from(rng, d_s)
    return corollary1_check(
        Constraint(rho_s, beta, model),
        task.method,
        instance=(
            f"i={task.index:04d} d_s={d_s} d_b={d_b} "
            f"beta={beta:.4f} frac={frac:.5f}"
        ),
    )


def corollary1_suite(
    n_instances: int = 1000,
    seed: int = 2024,
    beta_range: tuple[float, float] = (0.1, 10.0),
    frac_range: tuple[float, float] = (1e-4, 0.05),
    method: str = "perturbative",
    workers: int = 1,
) -> list[BoundReport]:
    """Randomized deviation-bound checks over models, states and temperatures."""
    tasks = [
        BoundSuiteTask(seed, i, beta_range, frac_range, method)
        for i in range(n_instances)
    ]
    return _pmap(_bound_suite_instance, tasks, workers)


# -- exact-solver robustness suite ------------------------------------------------


@dataclass(frozen=True)
class SolverSuiteTask:
    seed: int
    index: int
    frac_max: float


def _solver_suite_instance(task: SolverSuiteTask) -> tuple[str, int, float]:
    rng = np.random.default_rng(np.random.SeedSequence((task.seed, 6, task.index)))
    d_s = int(rng.integers(2, 5))
    d_b = int(rng.integers(2, 6))
    beta = _loguniform(rng, 0.1, 10.0)
    frac = _loguniform(rng, 1e-4, task.frac_max)
    model = build_random_model(d_s, d_b, frac, int(rng.integers(2**62)))
    rho_s = random_density_from(rng, d_s)
    sol = solve_exact(Constraint(rho_s, beta, model))
    descriptor = f"i={task.index:04d} d_s={d_s} d_b={d_b} beta={beta:.4f} frac={frac:.5f}"
    return descriptor, sol.iterations, sol.residual


def solver_suite(
    n_instances: int = 100,
    seed: int = 2024,
    frac_max: float = 0.05,
    workers: int = 1,
) -> list[tuple[str, int, float]]:
    """Exact solves over random instances; raises if any fails to converge."""
    tasks = [SolverSuiteTask(seed, i, frac_max) for i in range(n_instances)]
    return _pmap(_solver_suite_instance, tasks, workers)


# -- proposition scaling ------------------------------------------------------------


def proposition_distances(models_by_coupling, rho_s, beta: float = 1.0,
                          opts: SolverOptions = SolverOptions()) -> list[float]:
    """trace_norm(exact - perturbative) for each (coupling, model) pair."""
    out = []
    for _, model in models_by_coupling:
        c = Constraint(rho_s, beta, model)
        d = trace_norm(
            solve_exact(c, opts).joint_state.op
            - assignment_perturbative(c, opts.eigen_floor).joint_state.op
        )
        out.append(d)
    return out


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
