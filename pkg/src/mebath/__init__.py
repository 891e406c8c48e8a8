"""Maximum-entropy initial system-bath states.

Library and CLI for constructing the joint system-bath state of maximum
von Neumann entropy consistent with system tomography data, a Hamiltonian
model and a temperature constraint, together with the closed-form
weak-coupling correction to the factorized state, trace-norm bounds on
the induced correlations, and trace-distance witnesses for the resulting
non-completely-positive reduced dynamics.
"""

from .kernel import (
    BipartiteLayout,
    DensityOperator,
    Operator,
    kron,
    partial_trace_b,
    partial_trace_s,
    trace_norm,
    von_neumann_entropy,
)
from .models import (
    CentralSpinParams,
    HamiltonianModel,
    JaynesCummingsParams,
    build_central_spin,
    build_jaynes_cummings,
    build_random_model,
    random_density,
)
from .maxent import (
    Constraint,
    MaxEntSolution,
    SolverOptions,
    assignment_factorized_thermal,
    assignment_perturbative,
    assignment_uniform,
    solve_exact,
)

__all__ = [
    "BipartiteLayout",
    "CentralSpinParams",
    "Constraint",
    "DensityOperator",
    "HamiltonianModel",
    "JaynesCummingsParams",
    "MaxEntSolution",
    "Operator",
    "SolverOptions",
    "assignment_factorized_thermal",
    "assignment_perturbative",
    "assignment_uniform",
    "build_central_spin",
    "build_jaynes_cummings",
    "build_random_model",
    "kron",
    "partial_trace_b",
    "partial_trace_s",
    "random_density",
    "solve_exact",
    "trace_norm",
    "von_neumann_entropy",
]

__version__ = "0.1.0"
