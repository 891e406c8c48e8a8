"""Maximum-entropy system-bath states under tomography + temperature constraints.

The joint state of maximum von Neumann entropy consistent with a known
system state rho_S (complete tomography) and a fixed inverse temperature
beta has the form

    rho = exp(-Lambda (x) 1 - beta H) / tr{...},

with a system-only Hermitian multiplier operator Lambda fixed by the
marginal constraint tr_B{rho} = rho_S. This module computes that state
three ways:

* :func:`solve_exact` - damped fixed-point iteration on Lambda in log
  space, converging the marginal constraint to a requested tolerance;
* :func:`assignment_perturbative` - the closed-form weak-coupling state
  exp[log rho_S - dLambda - beta (H_B + H_SB)] / tr with the linear-order
  correction dLambda = -tr_B{rho_B^th beta H_SB}; its marginal matches
  rho_S only to second order in beta H_SB;
* :func:`assignment_factorized_thermal` / :func:`assignment_uniform` -
  the exactly solvable uncorrelated cases rho_S (x) rho_B^th and
  rho_S (x) 1/d_B.

Every route reports Lambda through the decomposition
Lambda = Lambda_0 + dLambda with Lambda_0 = -log rho_S - beta H_S; the
additive constant in Lambda is gauge and is fixed so that the reported
decomposition holds identically.

Only the complete-tomography, fixed-temperature constraint set is
implemented. Incomplete observable sets {O_i} and additional macroscopic
constraints would slot in as extra multiplier terms in the exponent; the
solver iteration would carry over unchanged, but no such extension is
built here.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .kernel import (
    DEFAULT_EIGEN_FLOOR,
    DensityOperator,
    KernelError,
    Operator,
    gibbs_state,
    herm_logm_support,
    identity,
    kron,
    normalized_gibbs,
    partial_trace_b,
    trace_norm,
)
from .models import HamiltonianModel

METHODS = ("exact", "perturbative", "factorized-thermal", "factorized-uniform")


class ConvergenceError(RuntimeError):
    """Exact solver did not reach the tolerance within the iteration budget."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DivergenceError(RuntimeError):
    """Residual kept growing despite damping reductions; try a smaller damping."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 500
    damping: float = 1.0
    eigen_floor: float = DEFAULT_EIGEN_FLOOR

    def __post_init__(self):
        if self.tol <= 0 or self.max_iter < 1 or not 0 < self.damping <= 1 \
                or self.eigen_floor <= 0:
            raise KernelError(f"invalid solver options {self}")


@dataclass(frozen=True, eq=False)
class Constraint:
    """Tomographic system state, inverse temperature and Hamiltonian model.

    ``beta = 0`` means there is no temperature constraint at all; the
    maximum-entropy state is then the uniform-bath product.
    """

    rho_s: DensityOperator
    beta: float
    model: HamiltonianModel

    def __post_init__(self):
        if self.rho_s.dim != self.model.layout.d_s:
            raise KernelError(
                f"rho_s dim {self.rho_s.dim} != system dim {self.model.layout.d_s}"
            )
        if self.beta < 0:
            raise KernelError(f"beta must be nonnegative, got {self.beta}")


@dataclass(frozen=True, eq=False)
class MaxEntSolution:
    """Multiplier operator, joint state and diagnostics of one solve.

    ``lambda_op == lambda0_op + delta_lambda`` holds identically; for the
    exact method the additive-constant gauge is fixed so that
    tr{lambda_op - lambda0_op - dLambda_formula} = 0, with the pre-gauge
    trace kept in ``gauge_trace`` as a diagnostic.
    """

    lambda_op: Operator
    lambda0_op: Operator
    delta_lambda: Operator
    joint_state: DensityOperator
    residual: float
    iterations: int
    method: str
    beta: float
    gauge_trace: float = 0.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise KernelError(f"unknown method {self.method!r}")


def thermal_bath_state(model: HamiltonianModel, beta: float) -> DensityOperator:
    return gibbs_state(model.h_b, beta)


def lambda0(
    rho_s: DensityOperator,
    h_s: Operator,
    beta: float,
    eigen_floor: float = DEFAULT_EIGEN_FLOOR,
) -> Operator:
    """Decoupled multiplier -log rho_S - beta H_S (log on the support).

    No additive-constant adjustment is made; the normalization trace of
    the joint state absorbs any constant.
    """
    return -1.0 * herm_logm_support(rho_s, eigen_floor) - beta * h_s


def delta_lambda(model: HamiltonianModel, beta: float) -> Operator:
    """Weak-coupling correction -beta tr_B{(1 (x) rho_B^th) H_SB}.

    System-only and Hermitian; independent of rho_S. Vanishes whenever
    the thermal bath average of the coupling's bath factors vanishes
    (e.g. photon-exchange couplings, whose ladder operators have zero
    thermal expectation).
    """
    if beta <= 0:
        raise KernelError("delta_lambda needs beta > 0")
    rho_th = thermal_bath_state(model, beta)
    weighted = kron(identity(model.layout.d_s), rho_th.op) @ model.h_sb
    out = -beta * partial_trace_b(weighted, model.layout)
    return Operator((out.entries + out.entries.conj().T) / 2)


def _marginal_residual(joint: DensityOperator, rho_s: DensityOperator,
                       model: HamiltonianModel) -> float:
    sigma = partial_trace_b(joint, model.layout)
    return trace_norm(sigma - rho_s.op)


def assignment_factorized_thermal(c: Constraint) -> MaxEntSolution:
    """Case of a bath equilibrated in isolation: rho_S (x) rho_B^th."""
    if c.beta <= 0:
        raise KernelError("factorized-thermal assignment needs beta > 0")
    joint = DensityOperator(kron(c.rho_s.op, thermal_bath_state(c.model, c.beta).op))
    lam0 = lambda0(c.rho_s, c.model.h_s, c.beta)
    zero = Operator(np.zeros((c.model.layout.d_s,) * 2))
    return MaxEntSolution(
        lambda_op=lam0,
        lambda0_op=lam0,
        delta_lambda=zero,
        joint_state=joint,
        residual=_marginal_residual(joint, c.rho_s, c.model),
        iterations=0,
        method="factorized-thermal",
        beta=c.beta,
    )


def assignment_uniform(c: Constraint) -> MaxEntSolution:
    """No macroscopic knowledge at all: rho_S (x) 1/d_B (beta is ignored)."""
    d_b = c.model.layout.d_b
    joint = DensityOperator(kron(c.rho_s.op, (1.0 / d_b) * identity(d_b)))
    lam0 = -1.0 * herm_logm_support(c.rho_s)
    zero = Operator(np.zeros((c.model.layout.d_s,) * 2))
    return MaxEntSolution(
        lambda_op=lam0,
        lambda0_op=lam0,
        delta_lambda=zero,
        joint_state=joint,
        residual=_marginal_residual(joint, c.rho_s, c.model),
        iterations=0,
        method="factorized-uniform",
        beta=c.beta,
    )


def assignment_perturbative(
    c: Constraint, eigen_floor: float = DEFAULT_EIGEN_FLOOR
) -> MaxEntSolution:
    """Closed-form weak-coupling state exp[log rho_S - dL - beta(H_B + H_SB)]/tr.

    The marginal constraint holds only to O((beta H_SB)^2); the residual
    is reported but not required to vanish.
    """
    if c.beta <= 0:
        raise KernelError("perturbative assignment needs beta > 0")
    layout = c.model.layout
    dlam = delta_lambda(c.model, c.beta)
    log_rho = herm_logm_support(c.rho_s, eigen_floor)
    exponent = kron(log_rho - dlam, identity(layout.d_b)) \
        - c.beta * c.model.bath_plus_coupling()
    joint = normalized_gibbs(exponent)
    lam0 = lambda0(c.rho_s, c.model.h_s, c.beta, eigen_floor)
    return MaxEntSolution(
        lambda_op=lam0 + dlam,
        lambda0_op=lam0,
        delta_lambda=dlam,
        joint_state=joint,
        residual=_marginal_residual(joint, c.rho_s, c.model),
        iterations=0,
        method="perturbative",
        beta=c.beta,
    )


def _clamped_full_rank(rho_s: DensityOperator, eigen_floor: float) -> DensityOperator:
    w = rho_s.eigvals()
    if w[0] >= eigen_floor:
        return rho_s
    warnings.warn(
        f"rho_s has eigenvalues below the floor {eigen_floor:.1e}; the marginal "
        "constraint is enforced on the clamped, renormalized state",
        stacklevel=3,
    )
    w_full, v = np.linalg.eigh((rho_s.entries + rho_s.entries.conj().T) / 2)
    w_full = np.maximum(w_full, eigen_floor)
    m = (v * w_full) @ v.conj().T
    return DensityOperator.from_matrix(m / np.trace(m).real)


def solve_exact(c: Constraint, opts: SolverOptions = SolverOptions()) -> MaxEntSolution:
    """Find Lambda with tr_B{exp(-Lambda (x) 1 - beta H)/tr} = rho_S to tolerance.

    Damped fixed-point iteration in log space,
    Lambda <- Lambda + eta (log sigma - log rho_S) with sigma the current
    system marginal, seeded at Lambda_0 + dLambda. The map is a
    contraction near the weak-coupling seed, so no Hessian is needed. On
    sustained residual growth the damping is halved (up to 4 times) and
    iteration restarts from the best multiplier seen.

    Raises :class:`ConvergenceError` after ``opts.max_iter`` iterations
    and :class:`DivergenceError` when damping reductions are exhausted.
    """
    if c.beta == 0:
        # no temperature constraint: exactly the uniform-bath product
        return assignment_uniform(c)

    layout = c.model.layout
    rho_s = _clamped_full_rank(c.rho_s, opts.eigen_floor)
    h_full = c.model.full()
    i_b = identity(layout.d_b)
    log_target = herm_logm_support(rho_s, opts.eigen_floor)
    lam0 = lambda0(rho_s, c.model.h_s, c.beta, opts.eigen_floor)
    dlam_formula = delta_lambda(c.model, c.beta)

    lam = lam0 + dlam_formula
    eta = opts.damping
    halvings = 0
    growth_streak = 0
    prev_residual = np.inf
    best_residual = np.inf
    best_lam = lam
    joint = None
    iterations = 0
    converged = False

    for k in range(opts.max_iter + 1):
        joint = normalized_gibbs(-1.0 * kron(lam, i_b) - c.beta * h_full)
        sigma = partial_trace_b(joint, layout)
        residual = trace_norm(sigma - rho_s.op)
        if residual < best_residual:
            best_residual = residual
            best_lam = lam
        if residual <= opts.tol:
            iterations = k
            converged = True
            break
        if k == opts.max_iter:
            break
        if residual > prev_residual:
            growth_streak += 1
        else:
            growth_streak = 0
        if growth_streak >= 10:
            halvings += 1
            if halvings > 4:
                raise DivergenceError(
                    f"residual kept growing after {halvings - 1} damping halvings "
                    f"(best {best_residual:.3e}); retry with a smaller damping",
                    residual=best_residual,
                )
            eta /= 2
            lam = best_lam
            growth_streak = 0
            prev_residual = np.inf
            continue
        prev_residual = residual
        lam = lam + eta * (herm_logm_support(sigma, opts.eigen_floor) - log_target)

    if not converged:
        raise ConvergenceError(
            f"no convergence after {opts.max_iter} iterations "
            f"(best residual {best_residual:.3e}, tol {opts.tol:.1e})",
            residual=best_residual,
            iterations=opts.max_iter,
        )

    # gauge: remove the additive constant so that
    # tr{Lambda - Lambda_0 - dLambda_formula} = 0
    gauge_trace = float((lam - lam0 - dlam_formula).trace().real)
    lam = lam - (gauge_trace / layout.d_s) * identity(layout.d_s)
    return MaxEntSolution(
        lambda_op=lam,
        lambda0_op=lam0,
        delta_lambda=lam - lam0,
        joint_state=joint,
        residual=best_residual if best_residual < opts.tol else float(
            trace_norm(partial_trace_b(joint, layout) - rho_s.op)
        ),
        iterations=iterations,
        method="exact",
        beta=c.beta,
        gauge_trace=gauge_trace,
    )


def assign(c: Constraint, method: str, opts: SolverOptions = SolverOptions()) -> MaxEntSolution:
    """Dispatch a joint-state assignment by method name."""
    if method == "exact":
        return solve_exact(c, opts)
    if method == "perturbative":
        return assignment_perturbative(c, opts.eigen_floor)
    if method == "factorized-thermal":
        return assignment_factorized_thermal(c)
    if method == "factorized-uniform":
        return assignment_uniform(c)
    raise KernelError(f"unknown assignment method {method!r}")


# -- solution serialization -----------------------------------------------------


def save_solution(out_dir, sol: MaxEntSolution) -> dict:
    """Write solution JSON plus matrix dumps; returns the JSON dict.

    The JSON records method, residual, iterations and beta, and file
    references to plain-text dumps of Lambda, dLambda and the joint state.
    """
    import json
    import os

    from .kernel import save_operator

    os.makedirs(out_dir, exist_ok=True)
    refs = {
        "lambda": "lambda.txt",
        "delta_lambda": "delta_lambda.txt",
        "rho_me": "rho_me.txt",
    }
    save_operator(os.path.join(out_dir, refs["lambda"]), sol.lambda_op)
    save_operator(os.path.join(out_dir, refs["delta_lambda"]), sol.delta_lambda)
    save_operator(os.path.join(out_dir, refs["rho_me"]), sol.joint_state.op)
    doc = {
        "method": sol.method,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "beta": sol.beta,
        "gauge_trace": sol.gauge_trace,
        "files": refs,
    }
    with open(os.path.join(out_dir, "solution.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc
