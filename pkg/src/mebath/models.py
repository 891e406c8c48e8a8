"""Hamiltonian model builders and the Jaynes-Cummings analytic correction.

Three families are provided:

* Jaynes-Cummings: a spin-1/2 coupled to a single light mode truncated at
  ``n_max`` Fock levels, H_S = (omega_a/2) sigma_z, H_B = omega a^dag a,
  H_SB = J (sigma_- a^dag + sigma_+ a).
* Central spin: one system spin and N bath spins with pairwise sigma_z
  couplings of strength g, all in units where half the level splitting
  is 1; every operator is diagonal in the computational basis.
* Random: independent GUE-distributed Hermitian parts, each rescaled to
  trace norm 1 (coupling rescaled to a prescribed trace-norm fraction).

For the Jaynes-Cummings model the first-order generator B of the
similarity transform e^{-B} rho_0 e^{B} that corrects the factorized
state is available in closed form; see :func:`jc_analytic_correction`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .kernel import (
    DIMENSION_CAP,
    BipartiteLayout,
    DensityOperator,
    KernelError,
    Operator,
    gibbs_state,
    identity,
    kron,
    load_operator,
    trace_norm,
)

SIGMA_X = Operator([[0, 1], [1, 0]], label="sigma_x")
SIGMA_Y = Operator([[0, -1j], [1j, 0]], label="sigma_y")
SIGMA_Z = Operator([[1, 0], [0, -1]], label="sigma_z")
# spin up = index 0: sigma_+ = |up><down|, sigma_- = |down><up|
SIGMA_PLUS = Operator([[0, 1], [0, 0]], label="sigma_+")
SIGMA_MINUS = Operator([[0, 0], [1, 0]], label="sigma_-")


class DegenerateCorrectionError(ValueError):
    """The M matrices of the first-order correction are singular."""


def fock_annihilation(n_levels: int) -> Operator:
    """Photon annihilation operator on a Fock space with n_levels levels."""
    return Operator(np.diag(np.sqrt(np.arange(1, n_levels)), k=1), label="a")


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    """System, bath and interaction parts of H = H_S + H_B + H_SB."""

    h_s: Operator
    h_b: Operator
    h_sb: Operator
    layout: BipartiteLayout

    def __post_init__(self):
        if self.h_s.dim != self.layout.d_s:
            raise KernelError(f"h_s dim {self.h_s.dim} != d_s {self.layout.d_s}")
        if self.h_b.dim != self.layout.d_b:
            raise KernelError(f"h_b dim {self.h_b.dim} != d_b {self.layout.d_b}")
        if self.h_sb.dim != self.layout.dim:
            raise KernelError(f"h_sb dim {self.h_sb.dim} != joint dim {self.layout.dim}")
        for name, part in (("h_s", self.h_s), ("h_b", self.h_b), ("h_sb", self.h_sb)):
            dev = part.herm_deviation()
            if dev > 1e-12:
                raise KernelError(f"{name} not Hermitian: deviation {dev:.3e}")

    def full(self) -> Operator:
        """H_S (x) 1 + 1 (x) H_B + H_SB on the joint space."""
        i_s = identity(self.layout.d_s)
        i_b = identity(self.layout.d_b)
        return kron(self.h_s, i_b) + kron(i_s, self.h_b) + self.h_sb

    def bath_plus_coupling(self) -> Operator:
        """1 (x) H_B + H_SB, the part entering the weak-coupling assignment."""
        return kron(identity(self.layout.d_s), self.h_b) + self.h_sb


# -- Jaynes-Cummings ----------------------------------------------------------


@dataclass(frozen=True)
class JaynesCummingsParams:
    """Spin splitting omega_a, mode frequency omega, real coupling J, Fock cut."""

    omega_a: float
    omega: float
    j_coupling: float
    n_max: int

    def __post_init__(self):
        if self.omega_a <= 0 or self.omega <= 0:
            raise KernelError("omega_a and omega must be positive")
        if self.n_max < 2:
            raise KernelError(f"n_max must be >= 2, got {self.n_max}")
        scale = min(self.omega_a, self.omega)
        if abs(self.j_coupling) > 0.1 * scale:
            warnings.warn(
                f"coupling J={self.j_coupling} is not small against the energy "
                f"scale {scale}; the weak-coupling formulas degrade",
                stacklevel=2,
            )


def jc_default_n_max(beta: float, omega: float, tail: float = 1e-12) -> int:
    """Smallest Fock cut with thermal tail e^{-b w n}/(1-e^{-b w}) below ``tail``."""
    if beta <= 0 or omega <= 0:
        raise KernelError("thermal truncation needs beta > 0 and omega > 0")
    x = beta * omega
    n = math.ceil(-math.log(tail * (1.0 - math.exp(-x))) / x)
    return max(2, n)


def build_jaynes_cummings(p: JaynesCummingsParams) -> HamiltonianModel:
    """Spin-1/2 coupled to one truncated light mode by photon exchange."""
    n_levels = p.n_max + 1
    a = fock_annihilation(n_levels)
    a_dag = a.dag()
    h_s = 0.5 * p.omega_a * SIGMA_Z
    h_b = p.omega * (a_dag @ a)
    h_sb = p.j_coupling * (kron(SIGMA_MINUS, a_dag) + kron(SIGMA_PLUS, a))
    return HamiltonianModel(h_s, h_b, h_sb, BipartiteLayout(2, n_levels))


# -- Central spin --------------------------------------------------------------


@dataclass(frozen=True)
class CentralSpinParams:
    """N bath spins, pairwise coupling g; energies in units of half the splitting."""

    n_bath: int
    g: float

    def __post_init__(self):
        if self.n_bath < 1:
            raise KernelError(f"n_bath must be >= 1, got {self.n_bath}")


def _bath_z_values(n_bath: int) -> np.ndarray:
    """(2^N, N) array of sigma_z eigenvalues per computational bath state."""
    idx = np.arange(2**n_bath)[:, None]
    bits = (idx >> np.arange(n_bath - 1, -1, -1)[None, :]) & 1
    return 1.0 - 2.0 * bits


def build_central_spin(p: CentralSpinParams) -> HamiltonianModel:
    """Central spin with sigma_z-sigma_z couplings; everything is diagonal."""
    d_b = 2**p.n_bath
    if 2 * d_b > DIMENSION_CAP:
        raise KernelError(
            f"{p.n_bath} bath spins need joint dimension {2 * d_b} > cap {DIMENSION_CAP}"
        )
    z = _bath_z_values(p.n_bath)
    z_sum = z.sum(axis=1)
    # sum_{i<j} z_i z_j = (S^2 - N) / 2 for z_i = +-1
    pair_sum = (z_sum**2 - p.n_bath) / 2.0
    h_s = Operator(SIGMA_Z.entries, label="h_s")
    h_b = Operator(np.diag(z_sum + p.g * pair_sum), label="h_b")
    joint_diag = p.g * np.concatenate([z_sum, -z_sum])
    h_sb = Operator(np.diag(joint_diag), label="h_sb")
    return HamiltonianModel(h_s, h_b, h_sb, BipartiteLayout(2, d_b))


# -- Random models -------------------------------------------------------------


def _gue_unit_trace_norm(d: int, rng: np.random.Generator) -> Operator:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (g + g.conj().T) / 2
    return Operator(h / trace_norm(Operator(h)))


def build_random_model(
    d_s: int, d_b: int, sb_norm_fraction: float, seed: int
) -> HamiltonianModel:
    """GUE-sampled parts; h_s, h_b at trace norm 1, h_sb at the given fraction."""
    if sb_norm_fraction <= 0:
        raise KernelError(f"sb_norm_fraction must be positive, got {sb_norm_fraction}")
    rng = np.random.default_rng(seed)
    h_s = _gue_unit_trace_norm(d_s, rng)
    h_b = _gue_unit_trace_norm(d_b, rng)
    h_sb = sb_norm_fraction * _gue_unit_trace_norm(d_s * d_b, rng)
    return HamiltonianModel(h_s, h_b, h_sb, BipartiteLayout(d_s, d_b))


def random_density(d: int, seed) -> DensityOperator:
    """Hilbert-Schmidt-measure state G G^dag / tr from a complex Ginibre G."""
    if d < 2:
        raise KernelError(f"dimension must be >= 2, got {d}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ g.conj().T
    return DensityOperator.from_matrix(m / np.trace(m).real)


def random_density_from(rng: np.random.Generator, d: int) -> DensityOperator:
    """Hilbert-Schmidt sample drawing from an existing generator stream."""
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ g.conj().T
    return DensityOperator.from_matrix(m / np.trace(m).real)


# -- Bloch parametrization and the Jaynes-Cummings B operator ------------------


@dataclass(frozen=True, eq=False)
class BlochState:
    """Qubit state 1/2 (1 + s . sigma) with multiplier vector -atanh(|s|) e_s."""

    s: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.s, dtype=float).copy()
        if v.shape != (3,):
            raise KernelError(f"Bloch vector must have shape (3,), got {v.shape}")
        if np.linalg.norm(v) > 1 + 1e-12:
            raise KernelError(f"Bloch vector length {np.linalg.norm(v)} exceeds 1")
        v.setflags(write=False)
        object.__setattr__(self, "s", v)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.s))

    @property
    def is_pure(self) -> bool:
        return self.norm >= 1 - 1e-12

    @property
    def direction(self) -> np.ndarray:
        n = self.norm
        return self.s / n if n > 0 else np.zeros(3)

    @property
    def lambda_vec(self) -> np.ndarray:
        """-atanh(|s|) e_s; diverges for pure states."""
        if self.is_pure and self.norm >= 1:
            raise KernelError("multiplier vector diverges for a pure state")
        return -math.atanh(self.norm) * self.direction

    def density(self) -> DensityOperator:
        m = 0.5 * (
            np.eye(2)
            + self.s[0] * SIGMA_X.entries
            + self.s[1] * SIGMA_Y.entries
            + self.s[2] * SIGMA_Z.entries
        )
        return DensityOperator.from_matrix(m)

    @classmethod
    def from_density(cls, rho: DensityOperator) -> "BlochState":
        if rho.dim != 2:
            raise KernelError("Bloch representation needs a qubit state")
        s = np.array(
            [
                np.trace(rho.entries @ p.entries).real
                for p in (SIGMA_X, SIGMA_Y, SIGMA_Z)
            ]
        )
        return cls(np.clip(s, -1.0, 1.0) if np.linalg.norm(s) > 1 else s)


_MU_PLUS = 0.5 * np.array([1.0, 1.0j, 0.0])  # sigma_+ = mu_+ . sigma
_MU_MINUS = 0.5 * np.array([1.0, -1.0j, 0.0])


def _cross_matrix(v: np.ndarray) -> np.ndarray:
    return np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
    )


def _m_matrices(lam: np.ndarray, beta_omega: float) -> tuple[np.ndarray, np.ndarray]:
    cross = 2j * _cross_matrix(lam)
    m_plus = beta_omega * np.eye(3) + cross
    m_minus = -beta_omega * np.eye(3) + cross
    return m_plus, m_minus


def jc_correction_coefficients(
    p: JaynesCummingsParams, bloch: BlochState, beta: float
) -> dict:
    """Coefficient vectors of the first-order generator B.

    Returns the full sigma-vector coefficients ``v_raise`` (the a^dag
    part) and ``v_lower`` (the a part), together with their split into
    the ladder pieces ``u_raise`` (+J/omega on sigma_- a^dag) and
    ``u_lower`` (-J/omega on sigma_+ a) plus the residual alpha vectors.
    The split is a bookkeeping convention; only v_raise/v_lower enter B.
    """
    if beta <= 0:
        raise KernelError("first-order correction needs beta > 0")
    j_over_w = p.j_coupling / p.omega
    u_raise = j_over_w
    u_lower = -j_over_w
    if bloch.is_pure:
        # analytic |s| -> 1 limit: only the component of the coefficient
        # vectors along the Bloch direction survives
        e = bloch.direction.astype(complex)
        v_raise = j_over_w * np.dot(e, _MU_MINUS) * e
        v_lower = -j_over_w * np.dot(e, _MU_PLUS) * e
    else:
        lam = bloch.lambda_vec
        m_plus, m_minus = _m_matrices(lam, beta * p.omega)
        for name, m in (("M_+", m_plus), ("M_-", m_minus)):
            if abs(np.linalg.det(m)) <= 1e-12:
                raise DegenerateCorrectionError(
                    f"{name} is singular for this Bloch vector / beta*omega; "
                    "the first-order correction is not defined here"
                )
        bj = beta * p.j_coupling
        v_raise = np.linalg.solve(m_plus, bj * _MU_MINUS)
        v_lower = np.linalg.solve(m_minus, bj * _MU_PLUS)
    return {
        "v_raise": v_raise,
        "v_lower": v_lower,
        "u_raise": u_raise,
        "u_lower": u_lower,
        "alpha_raise": v_raise - u_raise * _MU_MINUS,
        "alpha_lower": v_lower - u_lower * _MU_PLUS,
    }


def jc_analytic_correction(
    p: JaynesCummingsParams, bloch: BlochState, beta: float
) -> Operator:
    """First-order generator B with e^{-B} rho_0 e^{B} the corrected state.

    B solves [K, B] = beta J (sigma_- a^dag + sigma_+ a) with
    K = lambda . sigma + beta omega a^dag a, and is anti-Hermitian. For a
    maximally mixed system state it reduces to
    (J/omega)(sigma_- a^dag - sigma_+ a); for a pure state the corrected
    joint state coincides with the factorized one.
    """
    coef = jc_correction_coefficients(p, bloch, beta)
    a = fock_annihilation(p.n_max + 1)
    sigma = (SIGMA_X, SIGMA_Y, SIGMA_Z)
    raise_part = sum(
        (coef["v_raise"][i] * sigma[i] for i in range(3)), 0 * SIGMA_X
    )
    lower_part = sum(
        (coef["v_lower"][i] * sigma[i] for i in range(3)), 0 * SIGMA_X
    )
    return kron(raise_part, a.dag()) + kron(lower_part, a)


def _expm_antihermitian(b: Operator) -> np.ndarray:
    """e^{-B} for anti-Hermitian B, computed as e^{iX} with X = iB Hermitian."""
    x = 1j * b.entries
    dev = float(np.max(np.abs(x - x.conj().T)))
    scale = max(1.0, float(np.max(np.abs(x))))
    if dev > 1e-10 * scale:
        raise KernelError(f"generator is not anti-Hermitian: deviation {dev:.3e}")
    w, v = np.linalg.eigh((x + x.conj().T) / 2)
    return (v * np.exp(1j * w)) @ v.conj().T


def jc_first_order_state(
    p: JaynesCummingsParams, bloch: BlochState, beta: float
) -> DensityOperator:
    """e^{-B} (rho_S (x) rho_B^th) e^{B}, renormalized."""
    model = build_jaynes_cummings(p)
    rho0 = kron(bloch.density().op, gibbs_state(model.h_b, beta).op)
    u = _expm_antihermitian(jc_analytic_correction(p, bloch, beta))
    m = u @ rho0.entries @ u.conj().T
    m = (m + m.conj().T) / 2
    return DensityOperator.from_matrix(m / np.trace(m).real)


# -- JSON model descriptors ----------------------------------------------------


def model_from_config(cfg: dict, base_dir: str = ".") -> HamiltonianModel:
    """Build a model from a JSON descriptor {"model": ..., params...}.

    Variants: "jc" (omega_a, omega, j, n_max), "central-spin" (n_bath, g),
    "random" (d_s, d_b, sb_norm_fraction, seed) and "file" (d_s, d_b plus
    h_s/h_b/h_sb paths in the plain-text matrix format, relative to
    ``base_dir``).
    """
    import os

    kind = cfg.get("model")
    if kind == "jc":
        p = JaynesCummingsParams(
            omega_a=float(cfg.get("omega_a", 1.0)),
            omega=float(cfg.get("omega", 1.0)),
            j_coupling=float(cfg.get("j", cfg.get("j_coupling", 1e-3))),
            n_max=int(cfg["n_max"]) if "n_max" in cfg else jc_default_n_max(
                float(cfg.get("beta", 1.0)), float(cfg.get("omega", 1.0))
            ),
        )
        return build_jaynes_cummings(p)
    if kind == "central-spin":
        return build_central_spin(
            CentralSpinParams(n_bath=int(cfg.get("n_bath", 1)), g=float(cfg.get("g", 1e-3)))
        )
    if kind == "random":
        return build_random_model(
            int(cfg.get("d_s", 2)),
            int(cfg.get("d_b", 2)),
            float(cfg.get("sb_norm_fraction", 0.01)),
            int(cfg["seed"]),
        )
    if kind == "file":
        h_s = load_operator(os.path.join(base_dir, cfg["h_s"]))
        h_b = load_operator(os.path.join(base_dir, cfg["h_b"]))
        h_sb = load_operator(os.path.join(base_dir, cfg["h_sb"]))
        layout = BipartiteLayout(int(cfg["d_s"]), int(cfg["d_b"]))
        return HamiltonianModel(h_s, h_b, h_sb, layout)
    raise KernelError(f"unknown model kind {kind!r}")
