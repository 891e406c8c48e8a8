"""Dense complex operator algebra for bipartite system-bath problems.

Everything downstream (model builders, the maximum-entropy solvers, the
dynamics and bound checks) goes through the handful of primitives in this
module: tensor products, partial traces, Hermitian spectral functions
(exp, log), the trace norm and the von Neumann entropy.

Conventions
-----------
* hbar = 1 and k_B = 1 throughout; the inverse temperature ``beta`` is the
  only thermodynamic parameter.
* Bipartite ordering is fixed once and for all: the system factor comes
  first, i.e. a joint index is ``system_index * d_b + bath_index``.
* All spectral functions use an explicit Hermitian eigendecomposition.
  Inputs are Hermitian by construction (states, Hamiltonians) and their
  spectra are needed anyway for entropies, so there is no reason to reach
  for Pade / scaling-and-squaring routines.
* Values are immutable after construction (operators carry read-only
  arrays), so they are safe to share across parallel workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Dense eigendecompositions stop being a desk-scale tool past this size.
DIMENSION_CAP = 4096

# Eigenvalues of a density operator below this floor are treated as lying
# outside its support when taking logarithms.
DEFAULT_EIGEN_FLOOR = 1e-12

HERMITICITY_TOL = 1e-10


class KernelError(ValueError):
    """Base class for kernel-level input errors."""


class LayoutError(KernelError):
    """Operator dimension does not match the declared bipartite layout."""


class HermiticityError(KernelError):
    """Input violates a Hermiticity / positivity precondition."""


def _as_complex_matrix(entries) -> np.ndarray:
    m = np.asarray(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise KernelError(f"operator entries must be square, got shape {m.shape}")
    if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
        raise KernelError("operator entries contain NaN/Inf")
    return m


@dataclass(frozen=True, eq=False)
class Operator:
    """A dense complex square matrix with an optional label.

    The entry array is copied and frozen on construction; arithmetic
    returns new operators.
    """

    entries: np.ndarray
    label: str | None = None

    def __post_init__(self):
        m = _as_complex_matrix(self.entries).copy()
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dag(self) -> "Operator":
        return Operator(self.entries.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def herm_deviation(self) -> float:
        """Max-abs deviation from the adjoint."""
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return self.herm_deviation() <= tol

    def __add__(self, other: "Operator") -> "Operator":
        return Operator(self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        return Operator(self.entries - other.entries)

    def __neg__(self) -> "Operator":
        return Operator(-self.entries)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.entries * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        return Operator(self.entries @ other.entries)

    def __repr__(self):
        name = f" {self.label!r}" if self.label else ""
        return f"<Operator{name} dim={self.dim}>"


@dataclass(frozen=True)
class BipartiteLayout:
    """System and bath dimensions, system factor first."""

    d_s: int
    d_b: int

    def __post_init__(self):
        if self.d_s < 2:
            raise LayoutError(f"system dimension must be >= 2, got {self.d_s}")
        if self.d_b < 1:
            raise LayoutError(f"bath dimension must be >= 1, got {self.d_b}")

    @property
    def dim(self) -> int:
        return self.d_s * self.d_b

    def check(self, op: Operator) -> None:
        if op.dim != self.dim:
            raise LayoutError(
                f"operator dim {op.dim} does not match layout "
                f"{self.d_s}x{self.d_b}={self.dim}"
            )


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A Hermitian, unit-trace, positive-semidefinite operator.

    ``atol`` is the tolerance context for the trace and positivity checks
    (Hermiticity is always required to 1e-12). States produced by long
    evolutions may be constructed with a slightly looser ``atol``.
    """

    op: Operator
    atol: float = 1e-10

    def __post_init__(self):
        if self.atol < 0:
            raise KernelError("tolerance must be nonnegative")
        dev = self.op.herm_deviation()
        if dev > 1e-12:
            raise HermiticityError(f"density operator not Hermitian: deviation {dev:.3e}")
        tr = self.op.trace()
        if abs(tr - 1.0) > max(self.atol, 1e-10):
            raise KernelError(f"density operator trace {tr} is not 1")
        w = np.linalg.eigvalsh(_symmetrized(self.op.entries))
        if w[0] < -max(self.atol, 1e-10):
            raise KernelError(f"density operator has negative eigenvalue {w[0]:.3e}")

    @classmethod
    def from_matrix(cls, entries, atol: float = 1e-10) -> "DensityOperator":
        return cls(Operator(entries), atol)

    @property
    def entries(self) -> np.ndarray:
        return self.op.entries

    @property
    def dim(self) -> int:
        return self.op.dim

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(_symmetrized(self.entries))

    def __repr__(self):
        return f"<DensityOperator dim={self.dim}>"


def identity(d: int) -> Operator:
    return Operator(np.eye(d))


def _symmetrized(m: np.ndarray) -> np.ndarray:
    # round-off drift control before every spectral call
    return (m + m.conj().T) / 2


def _entries(x) -> np.ndarray:
    if isinstance(x, DensityOperator):
        return x.entries
    if isinstance(x, Operator):
        return x.entries
    raise TypeError(f"expected Operator or DensityOperator, got {type(x).__name__}")


def eigh(x) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of the symmetrized input; returns (w, V)."""
    return np.linalg.eigh(_symmetrized(_entries(x)))


def kron(a: Operator, b: Operator) -> Operator:
    """Tensor product with the system factor first."""
    return Operator(np.kron(_entries(a), _entries(b)))


def partial_trace_b(x, layout: BipartiteLayout) -> Operator:
    """Trace out the bath factor, returning a d_s x d_s operator."""
    m = _entries(x)
    if m.shape[0] != layout.dim:
        raise LayoutError(
            f"operator dim {m.shape[0]} does not match layout "
            f"{layout.d_s}x{layout.d_b}={layout.dim}"
        )
    t = m.reshape(layout.d_s, layout.d_b, layout.d_s, layout.d_b)
    return Operator(np.einsum("sbtb->st", t))


def partial_trace_s(x, layout: BipartiteLayout) -> Operator:
    """Trace out the system factor, returning a d_b x d_b operator."""
    m = _entries(x)
    if m.shape[0] != layout.dim:
        raise LayoutError(
            f"operator dim {m.shape[0]} does not match layout "
            f"{layout.d_s}x{layout.d_b}={layout.dim}"
        )
    t = m.reshape(layout.d_s, layout.d_b, layout.d_s, layout.d_b)
    return Operator(np.einsum("sbsc->bc", t))


def herm_expm(x) -> Operator:
    """exp(x) of a Hermitian operator via spectral decomposition.

    The result is the unnormalized matrix exponential; see
    :func:`normalized_gibbs` for the overflow-safe e^x / tr{e^x} form.
    """
    m = _entries(x)
    dev = float(np.max(np.abs(m - m.conj().T)))
    if dev > HERMITICITY_TOL:
        raise HermiticityError(f"herm_expm input not Hermitian: deviation {dev:.3e}")
    w, v = np.linalg.eigh(_symmetrized(m))
    out = (v * np.exp(w)) @ v.conj().T
    return Operator(_symmetrized(out))


def herm_logm_support(x, eigen_floor: float = DEFAULT_EIGEN_FLOOR) -> Operator:
    """Spectral logarithm of a PSD operator, clamped to its support.

    Eigenvalues below ``eigen_floor`` are clamped to the floor before the
    log, which realizes the log-on-the-support convention while keeping
    the result finite for near-pure states.
    """
    m = _entries(x)
    dev = float(np.max(np.abs(m - m.conj().T)))
    if dev > HERMITICITY_TOL:
        raise HermiticityError(f"herm_logm_support input not Hermitian: deviation {dev:.3e}")
    w, v = np.linalg.eigh(_symmetrized(m))
    if w[0] < -1e-10:
        raise HermiticityError(f"herm_logm_support input not PSD: min eigenvalue {w[0]:.3e}")
    w = np.maximum(w, eigen_floor)
    out = (v * np.log(w)) @ v.conj().T
    return Operator(_symmetrized(out))


def trace_norm(x) -> float:
    """Trace norm ||x||_1 = tr sqrt(x^dag x), the sum of singular values."""
    return float(np.sum(np.linalg.svd(_entries(x), compute_uv=False)))


def von_neumann_entropy(rho) -> float:
    """-tr{rho log rho} with 0 log 0 := 0 (natural log)."""
    w = np.linalg.eigvalsh(_symmetrized(_entries(rho)))
    w = w[w > 0]
    return float(-np.sum(w * np.log(w)))


def normalized_gibbs(exponent) -> DensityOperator:
    """e^{exponent} / tr{e^{exponent}} for a Hermitian exponent.

    Shifts the spectrum by its maximum before exponentiating; the shift
    cancels in the normalization, so large exponents do not overflow.
    """
    m = _entries(exponent)
    dev = float(np.max(np.abs(m - m.conj().T)))
    if dev > HERMITICITY_TOL:
        raise HermiticityError(f"gibbs exponent not Hermitian: deviation {dev:.3e}")
    w, v = np.linalg.eigh(_symmetrized(m))
    p = np.exp(w - w[-1])
    p /= p.sum()
    out = _symmetrized((v * p) @ v.conj().T)
    return DensityOperator(Operator(out))


def gibbs_state(h: Operator, beta: float) -> DensityOperator:
    """Thermal state e^{-beta h} / tr at inverse temperature beta."""
    if beta < 0:
        raise KernelError(f"beta must be nonnegative, got {beta}")
    return normalized_gibbs(-beta * h)


# -- plain-text matrix serialization -----------------------------------------
#
# Format: one header line "dim=<n>", then n rows of n whitespace-separated
# complex entries written "a+bi". Used by the CLI for custom-Hamiltonian
# input and for solution matrix dumps.


def _format_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}i"


def _parse_complex(token: str) -> complex:
    try:
        return complex(token.replace("i", "j"))
    except ValueError as exc:
        raise KernelError(f"cannot parse complex entry {token!r}") from exc


def save_operator(path, x, label: str | None = None) -> None:
    m = _entries(x)
    lines = [f"dim={m.shape[0]}"]
    for row in m:
        lines.append(" ".join(_format_complex(z) for z in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    del label  # labels are not part of the wire format


def load_operator(path) -> Operator:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("dim="):
        raise KernelError(f"{path}: expected 'dim=<n>' header")
    try:
        n = int(lines[0][4:])
    except ValueError as exc:
        raise KernelError(f"{path}: bad dimension header {lines[0]!r}") from exc
    if len(lines) != n + 1:
        raise KernelError(f"{path}: expected {n} rows, found {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        tokens = ln.split()
        if len(tokens) != n:
            raise KernelError(f"{path}: expected {n} entries per row, found {len(tokens)}")
        rows.append([_parse_complex(t) for t in tokens])
    return Operator(np.array(rows, dtype=complex))


def max_entropy_value(d: int) -> float:
    """log d, the entropy ceiling for dimension d."""
    return math.log(d)
