"""Joint unitary evolution, reduced dynamical maps and the trace-distance witness.

A reduced dynamical map is built by assigning a joint state to the
initial system state, evolving it with U(t) = exp(-i H t) and tracing
out the bath. The witness series tracks

    delta(t) = || rho_S(t) - rho_S'(t) ||_1 - || rho_S(0) - rho_S'(0) ||_1,

the growth of distinguishability between two evolved system states
relative to the start of the evolution. A completely positive map never
increases trace distance, so positive delta signals non-CP reduced
dynamics caused by initial system-bath correlations; for weak coupling
delta is bounded by 8 beta ||H_SB||_1 at all times.

Times in :class:`EvolutionSpec` grids are dimensionless, measured in
units of hbar / E_max with E_max the maximum eigenenergy magnitude of
H_S; :func:`propagator` itself takes the physical time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import (
    BipartiteLayout,
    DensityOperator,
    KernelError,
    Operator,
    eigh,
    partial_trace_b,
    trace_norm,
)
from .maxent import Constraint, MaxEntSolution, SolverOptions, assign
from .models import HamiltonianModel

ASSIGNMENTS = ("exact", "perturbative", "factorized-thermal", "factorized-uniform")


@dataclass(frozen=True, eq=False)
class EvolutionSpec:
    """Model, dimensionless time grid and assignment method for one run."""

    model: HamiltonianModel
    t_grid: np.ndarray
    assignment: str = "exact"

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float).copy()
        if t.ndim != 1 or t.size < 1:
            raise KernelError("t_grid must be a nonempty 1-d array")
        if t[0] != 0.0:
            raise KernelError("t_grid must start at 0")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise KernelError("t_grid must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "t_grid", t)
        if self.assignment not in ASSIGNMENTS:
            raise KernelError(f"unknown assignment {self.assignment!r}")


@dataclass(frozen=True, eq=False)
class WitnessSeries:
    """Distinguishability growth samples and the weak-coupling bound.

    ``delta[0] = 0`` by construction (growth is measured against the
    t = 0 reduced states); ``initial_distance`` records the trace
    distance of the two input tomography states.
    """

    t: np.ndarray
    delta: np.ndarray
    bound: float
    initial_distance: float

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).copy()
        d = np.asarray(self.delta, dtype=float).copy()
        if t.shape != d.shape:
            raise KernelError("t and delta must have matching shapes")
        if d.size and d[0] != 0.0:
            raise KernelError("delta[0] must be 0")
        t.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "delta", d)

    @property
    def max_delta(self) -> float:
        return float(np.max(self.delta))


def system_energy_scale(model: HamiltonianModel) -> float:
    """Maximum eigenenergy magnitude of H_S, the unit for grid times."""
    w = np.linalg.eigvalsh((model.h_s.entries + model.h_s.entries.conj().T) / 2)
    scale = float(np.max(np.abs(w)))
    if scale == 0.0:
        raise KernelError("H_S is zero; the time unit is undefined")
    return scale


def propagator(model: HamiltonianModel, t: float) -> Operator:
    """U = exp(-i H t) via spectral decomposition of the full Hamiltonian."""
    if t < 0:
        raise KernelError(f"time must be nonnegative, got {t}")
    w, v = eigh(model.full())
    return Operator((v * np.exp(-1j * w * t)) @ v.conj().T)


def _evolved_marginals(
    spec: EvolutionSpec,
    joint: DensityOperator,
    layout: BipartiteLayout,
    w: np.ndarray,
    v: np.ndarray,
    scale: float,
) -> list[DensityOperator]:
    rho0 = v.conj().T @ joint.entries @ v
    out = []
    for t in spec.t_grid:
        phase = np.exp(-1j * w * (t / scale))
        m = (v * phase) @ rho0 @ (v * phase).conj().T
        m = (m + m.conj().T) / 2
        out.append(DensityOperator(partial_trace_b(Operator(m), layout), atol=1e-9))
    return out


def reduced_map(
    spec: EvolutionSpec,
    rho_s: DensityOperator,
    beta: float,
    opts: SolverOptions = SolverOptions(),
) -> list[DensityOperator]:
    """rho_S(t) = tr_B{U(t) A(rho_S) U(t)^dag} over the grid.

    The eigendecomposition of H is computed once and reused for every
    grid point.
    """
    sol = assign(Constraint(rho_s, beta, spec.model), spec.assignment, opts)
    w, v = eigh(spec.model.full())
    scale = system_energy_scale(spec.model)
    return _evolved_marginals(spec, sol.joint_state, spec.model.layout, w, v, scale)


def witness_delta(
    spec: EvolutionSpec,
    rho_s: DensityOperator,
    rho_s_prime: DensityOperator,
    beta: float,
    opts: SolverOptions = SolverOptions(),
) -> WitnessSeries:
    """Distinguishability-growth series for a pair of system states."""
    if rho_s.dim != rho_s_prime.dim:
        raise KernelError("witness states must have the same dimension")
    sol_a = assign(Constraint(rho_s, beta, spec.model), spec.assignment, opts)
    sol_b = assign(Constraint(rho_s_prime, beta, spec.model), spec.assignment, opts)
    w, v = eigh(spec.model.full())
    scale = system_energy_scale(spec.model)
    layout = spec.model.layout
    states_a = _evolved_marginals(spec, sol_a.joint_state, layout, w, v, scale)
    states_b = _evolved_marginals(spec, sol_b.joint_state, layout, w, v, scale)
    distances = np.array(
        [trace_norm(a.op - b.op) for a, b in zip(states_a, states_b)]
    )
    delta = distances - distances[0]
    delta[0] = 0.0
    return WitnessSeries(
        t=spec.t_grid,
        delta=delta,
        bound=8.0 * beta * trace_norm(spec.model.h_sb),
        initial_distance=trace_norm(rho_s.op - rho_s_prime.op),
    )


def witness_csv_rows(series: WitnessSeries) -> list[tuple]:
    """Rows (t, delta, bound, initial_distance) for delimited export."""
    return [
        (float(t), float(d), series.bound, series.initial_distance)
        for t, d in zip(series.t, series.delta)
    ]
