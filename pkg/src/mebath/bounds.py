"""Correlation bounds, conditional entropy and the Haar-average cross-check.

Two trace-norm inequalities quantify how weakly a maximum-entropy joint
state is correlated at weak coupling, and how weakly non-CP its reduced
dynamics can be:

* deviation bound:       || A_beta(rho_S) - rho_S (x) rho_B^th ||_1 <= 4 beta ||H_SB||_1
* distinguishability:    max_t delta(t)                         <= 8 beta ||H_SB||_1

Both checks report the two sides and the slack, not just a boolean, so
sweeps can be plotted directly. The conditional entropy
S(B|S) = S(joint) - S(system marginal) locates a joint state inside the
feasible set: log d_B for the uniform-bath product at the top,
-S(rho_S) for a purification at the bottom, with negative values
certifying system-bath correlations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import (
    BipartiteLayout,
    DensityOperator,
    KernelError,
    Operator,
    kron,
    partial_trace_b,
    partial_trace_s,
    trace_norm,
    von_neumann_entropy,
)
from .maxent import Constraint, SolverOptions, assign, thermal_bath_state

BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class BoundReport:
    """One inequality instance: lhs vs rhs with slack = rhs - lhs."""

    lhs: float
    rhs: float
    satisfied: bool
    slack: float
    instance: str

    @classmethod
    def compare(cls, lhs: float, rhs: float, instance: str) -> "BoundReport":
        return cls(
            lhs=float(lhs),
            rhs=float(rhs),
            satisfied=bool(lhs <= rhs + BOUND_SLACK),
            slack=float(rhs - lhs),
            instance=instance,
        )


def corollary1_check(
    c: Constraint,
    method: str = "perturbative",
    opts: SolverOptions = SolverOptions(),
    instance: str = "",
) -> BoundReport:
    """Deviation from the factorized state against 4 beta ||H_SB||_1."""
    if c.beta <= 0:
        raise KernelError("the deviation bound needs beta > 0")
    sol = assign(c, method, opts)
    rho0 = kron(c.rho_s.op, thermal_bath_state(c.model, c.beta).op)
    lhs = trace_norm(sol.joint_state.op - rho0)
    rhs = 4.0 * c.beta * trace_norm(c.model.h_sb)
    return BoundReport.compare(lhs, rhs, instance or f"method={method}")


def corollary2_check(series, instance: str = "") -> BoundReport:
    """Maximum distinguishability growth against the series bound."""
    lhs = float(np.max(series.delta))
    return BoundReport.compare(lhs, series.bound, instance or "witness")


def conditional_entropy(joint: DensityOperator, layout: BipartiteLayout) -> float:
    """S(B|S) = S(joint) - S(system marginal)."""
    marginal = partial_trace_b(joint, layout)
    return von_neumann_entropy(joint) - von_neumann_entropy(marginal)


def purify(rho_s: DensityOperator, d_b: int) -> DensityOperator:
    """Pure joint state sum_i sqrt(p_i) |i>_S |i>_B with system marginal rho_s.

    Needs a bath of dimension at least the rank of rho_s (eigenvalues
    above 1e-12 count towards the rank).
    """
    w, v = np.linalg.eigh((rho_s.entries + rho_s.entries.conj().T) / 2)
    keep = w > 1e-12
    rank = int(np.sum(keep))
    if d_b < rank:
        raise KernelError(f"bath dimension {d_b} below rank {rank} of rho_s")
    d_s = rho_s.dim
    psi = np.zeros(d_s * d_b, dtype=complex)
    for k, idx in enumerate(np.nonzero(keep)[0]):
        # joint index = system_index * d_b + bath_index
        psi += np.sqrt(w[idx]) * np.kron(v[:, idx], _bath_basis(d_b, k))
    m = np.outer(psi, psi.conj())
    return DensityOperator.from_matrix(m / np.trace(m).real)


def _bath_basis(d_b: int, k: int) -> np.ndarray:
    e = np.zeros(d_b, dtype=complex)
    e[k] = 1.0
    return e


def haar_random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix.

    The R diagonal is phase-fixed so the distribution is exactly Haar.
    """
    g = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    ph = np.diag(r).copy()
    ph /= np.abs(ph)
    return q * ph


def haar_average_mc(
    rho_s: DensityOperator, d_b: int, n_samples: int, seed
) -> DensityOperator:
    """Monte-Carlo mean of (1 (x) U_B) |psi><psi| (1 (x) U_B^dag) over Haar U_B.

    |psi> is a purification of rho_s when the bath is large enough,
    otherwise the product fiducial rho_s (x) 1/d_B (same marginal). The
    mean converges to rho_s (x) 1/d_B at the usual 1/sqrt(n) rate.
    """
    if n_samples < 1:
        raise KernelError(f"n_samples must be >= 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    try:
        fiducial = purify(rho_s, d_b).entries
    except KernelError:
        fiducial = np.kron(rho_s.entries, np.eye(d_b) / d_b)
    d_s = rho_s.dim
    acc = np.zeros((d_s * d_b, d_s * d_b), dtype=complex)
    for _ in range(n_samples):
        u = np.kron(np.eye(d_s), haar_random_unitary(d_b, rng))
        acc += u @ fiducial @ u.conj().T
    acc /= n_samples
    acc = (acc + acc.conj().T) / 2
    return DensityOperator.from_matrix(acc / np.trace(acc).real)


def correlation_norm(joint: DensityOperator, layout: BipartiteLayout) -> float:
    """Trace distance of a joint state from the product of its marginals."""
    product = kron(partial_trace_b(joint, layout), partial_trace_s(joint, layout))
    return trace_norm(joint.op - product)
