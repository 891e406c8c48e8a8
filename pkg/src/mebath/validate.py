"""Named invariant checks behind the ``validate`` CLI command.

Each check is a function (quick, seed, workers) -> CheckResult. Quick
mode shrinks instance counts to keep the whole table under a minute;
the full run is the reference validation and mirrors the acceptance
suite. Checks look up library functions at call time, so a test harness
can exercise them under mutations (e.g. a deliberately wrong-signed
weak-coupling correction must break the scaling check).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import bounds as _bounds
from . import experiments as _exp
from . import kernel as _kernel
from . import maxent as _maxent
from . import models as _models


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    elapsed: float


def _result(name, t0, passed, detail) -> CheckResult:
    return CheckResult(name, bool(passed), detail, time.monotonic() - t0)


def check_kernel_partial_trace(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    rng = np.random.default_rng(np.random.SeedSequence((seed, 10)))
    n = 20 if quick else 100
    worst = 0.0
    for _ in range(n):
        d_s, d_b = int(rng.integers(2, 5)), int(rng.integers(1, 5))
        layout = _kernel.BipartiteLayout(d_s, d_b)
        rho_s = _models.random_density_from(rng, d_s)
        rho_b = _models.random_density_from(rng, d_b) if d_b > 1 else \
            _kernel.DensityOperator(_kernel.identity(1))
        joint = _kernel.kron(rho_s.op, rho_b.op)
        dev = _kernel.trace_norm(_kernel.partial_trace_b(joint, layout) - rho_s.op)
        worst = max(worst, dev)
    return _result(
        "kernel-partial-trace-product", t0, worst <= 1e-12,
        f"max |tr_B(rho_S x rho_B) - rho_S|_1 = {worst:.2e} over {n} products",
    )


def check_kernel_spectral(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    rng = np.random.default_rng(np.random.SeedSequence((seed, 11)))
    n = 10 if quick else 50
    worst_rt = 0.0
    min_trace = np.inf
    for _ in range(n):
        d = int(rng.integers(2, 7))
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        h = (g + g.conj().T) / 2
        # spectrum inside [-20, 20]; the spread is capped at 14 because the
        # round trip goes through the dense matrix e^A, whose small
        # eigenvalues are lost to float64 once e^(spread) nears 1/eps
        w = np.linalg.eigvalsh(h)
        center = float(rng.uniform(-13.0, 13.0))
        half_width = float(rng.uniform(0.5, 7.0))
        h = (h - np.mean(w) * np.eye(d)) * (2 * half_width / (w[-1] - w[0])) \
            + center * np.eye(d)
        a = _kernel.Operator(h)
        e = _kernel.herm_expm(a)
        min_trace = min(min_trace, e.trace().real)
        rt = _kernel.trace_norm(_kernel.herm_logm_support(e) - a)
        worst_rt = max(worst_rt, rt)
    passed = worst_rt <= 1e-8 and min_trace > 0
    return _result(
        "kernel-spectral-roundtrip", t0, passed,
        f"max |log(exp(A)) - A|_1 = {worst_rt:.2e}, min tr e^A = {min_trace:.2e}",
    )


def check_kernel_trace_norm(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    rng = np.random.default_rng(np.random.SeedSequence((seed, 12)))
    n = 20 if quick else 100
    worst_tri = -np.inf
    worst_sub = -np.inf
    for _ in range(n):
        d = int(rng.integers(2, 6))
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        b = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        oa, ob = _kernel.Operator(a), _kernel.Operator(b)
        tri = _kernel.trace_norm(oa + ob) - (_kernel.trace_norm(oa) + _kernel.trace_norm(ob))
        sub = _kernel.trace_norm(oa @ ob) - _kernel.trace_norm(oa) * _kernel.trace_norm(ob)
        worst_tri = max(worst_tri, tri)
        worst_sub = max(worst_sub, sub)
    passed = worst_tri <= 1e-10 and worst_sub <= 1e-10
    return _result(
        "kernel-trace-norm-inequalities", t0, passed,
        f"max triangle excess {worst_tri:.2e}, max submult excess {worst_sub:.2e} ({n} pairs)",
    )


def check_kernel_entropy(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    rng = np.random.default_rng(np.random.SeedSequence((seed, 13)))
    n = 10 if quick else 50
    worst = 0.0
    in_range = True
    for _ in range(n):
        d = int(rng.integers(2, 7))
        rho = _models.random_density_from(rng, d)
        s = _kernel.von_neumann_entropy(rho)
        in_range &= -1e-12 <= s <= np.log(d) + 1e-12
        u = _bounds.haar_random_unitary(d, rng)
        rotated = _kernel.DensityOperator.from_matrix(u @ rho.entries @ u.conj().T)
        worst = max(worst, abs(_kernel.von_neumann_entropy(rotated) - s))
    return _result(
        "kernel-entropy-unitary-invariance", t0, worst <= 1e-10 and in_range,
        f"max |S(U rho U^dag) - S(rho)| = {worst:.2e} over {n} rotations",
    )


def check_jc_delta_lambda_zero(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    betas = (0.2, 1.0) if quick else (0.1, 0.5, 1.0, 3.0)
    omegas = (0.7, 1.0) if quick else (0.5, 1.0, 2.0)
    js = (1e-3, 1e-2)
    n_maxes = (5, 12) if quick else (5, 12, 30)
    worst = 0.0
    for beta in betas:
        for omega in omegas:
            for j in js:
                for n_max in n_maxes:
                    p = _models.JaynesCummingsParams(1.0, omega, j, n_max)
                    model = _models.build_jaynes_cummings(p)
                    worst = max(worst, _kernel.trace_norm(_maxent.delta_lambda(model, beta)))
    return _result(
        "jc-delta-lambda-vanishes", t0, worst <= 1e-10,
        f"max |dLambda|_1 = {worst:.2e} over the (beta, omega, J, n_max) grid",
    )


def _jc_models(couplings, n_max=30):
    return [
        (j, _models.build_jaynes_cummings(_models.JaynesCummingsParams(1.0, 1.0, j, n_max)))
        for j in couplings
    ]


def _central_spin_models(couplings, n_bath=3):
    return [
        (g, _models.build_central_spin(_models.CentralSpinParams(n_bath, g)))
        for g in couplings
    ]


PROPOSITION_COUPLINGS = (1e-1, 1e-2, 1e-3, 1e-4)


def check_proposition_scaling_jc(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    n_max = 12 if quick else 30
    rho_s = _models.random_density(2, np.random.SeedSequence((seed, 14)))
    dists = _exp.proposition_distances(
        _jc_models(PROPOSITION_COUPLINGS, n_max), rho_s, beta=1.0
    )
    slope = _exp.loglog_slope(PROPOSITION_COUPLINGS, dists)
    return _result(
        "proposition-scaling-jaynes-cummings", t0, abs(slope - 2.0) <= 0.2,
        f"log-log slope {slope:.3f} (want 2.0 +- 0.2), distances {['%.2e' % d for d in dists]}",
    )


def check_proposition_scaling_central_spin(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    n_bath = 2 if quick else 4
    rho_s = _models.random_density(2, np.random.SeedSequence((seed, 15)))
    dists = _exp.proposition_distances(
        _central_spin_models(PROPOSITION_COUPLINGS, n_bath), rho_s, beta=1.0
    )
    slope = _exp.loglog_slope(PROPOSITION_COUPLINGS, dists)
    return _result(
        "proposition-scaling-central-spin", t0, abs(slope - 2.0) <= 0.2,
        f"log-log slope {slope:.3f} (want 2.0 +- 0.2), distances {['%.2e' % d for d in dists]}",
    )


def check_corollary1_suite(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    n = 100 if quick else 1000
    reports = _exp.corollary1_suite(n_instances=n, seed=seed, workers=workers)
    violations = [r for r in reports if not r.satisfied]
    min_slack = min(r.slack for r in reports)
    return _result(
        "corollary1-randomized-suite", t0, not violations,
        f"{len(reports) - len(violations)}/{len(reports)} satisfied, min slack {min_slack:.3e}",
    )


def check_corollary2_batch(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    n_h, n_p, n_t = (6, 3, 50) if quick else (30, 10, 200)
    rows, _ = _exp.fig3_batch(
        n_hamiltonians=n_h, n_pairs=n_p, n_times=n_t, seed=seed, workers=workers
    )
    max_deltas = np.array([r[1] for r in rows])
    bounds_arr = np.array([r[2] for r in rows])
    violations = int(np.sum(max_deltas > bounds_arr + 1e-9))
    median_ratio = float(np.median(max_deltas / bounds_arr))
    passed = violations == 0 and median_ratio <= 0.1
    return _result(
        "corollary2-witness-batch", t0, passed,
        f"{len(rows)} series, {violations} violations, median maxDelta/bound = {median_ratio:.4f}",
    )


def check_case_limits(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    rho_s = _models.random_density(2, np.random.SeedSequence((seed, 16)))
    # decoupled: exact ME must be the thermal product
    model0 = _models.build_jaynes_cummings(
        _models.JaynesCummingsParams(1.0, 1.0, 0.0, 8 if quick else 20)
    )
    c0 = _maxent.Constraint(rho_s, 1.2, model0)
    sol0 = _maxent.solve_exact(c0)
    product = _kernel.kron(rho_s.op, _maxent.thermal_bath_state(model0, 1.2).op)
    dev_thermal = _kernel.trace_norm(sol0.joint_state.op - product)
    # no temperature constraint: exactly the uniform product
    model1 = _models.build_central_spin(_models.CentralSpinParams(2, 1e-2))
    sol1 = _maxent.solve_exact(_maxent.Constraint(rho_s, 0.0, model1))
    uniform = _kernel.kron(rho_s.op, (1 / 4) * _kernel.identity(4))
    dev_uniform = _kernel.trace_norm(sol1.joint_state.op - uniform)
    passed = dev_thermal <= 1e-10 and dev_uniform <= 1e-12
    return _result(
        "case-limits", t0, passed,
        f"|ME - thermal product|_1 = {dev_thermal:.2e} (H_SB=0), "
        f"|ME - uniform product|_1 = {dev_uniform:.2e} (beta=0)",
    )


HAAR_SAMPLE_SIZES = (100, 1000, 10000)


def check_haar_mc(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    sizes = (50, 500, 5000) if quick else HAAR_SAMPLE_SIZES
    repeats = 3 if quick else 6
    rho_s = _models.random_density(2, np.random.SeedSequence((seed, 17)))
    d_b = 2
    target = _kernel.kron(rho_s.op, 0.5 * _kernel.identity(d_b))
    errors = []
    for n in sizes:
        errs = [
            _kernel.trace_norm(
                _bounds.haar_average_mc(
                    rho_s, d_b, n, np.random.SeedSequence((seed, 18, n, r))
                ).op
                - target
            )
            for r in range(repeats)
        ]
        errors.append(float(np.mean(errs)))
    slope = _exp.loglog_slope(sizes, errors)
    return _result(
        "haar-average-convergence", t0, abs(slope + 0.5) <= 0.1,
        f"log-log slope {slope:.3f} (want -0.5 +- 0.1), errors {['%.2e' % e for e in errors]}",
    )


def check_conditional_entropy(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    rng = np.random.default_rng(np.random.SeedSequence((seed, 19)))
    n = 5 if quick else 20
    worst_pur = 0.0
    worst_uni = 0.0
    in_band = True
    for _ in range(n):
        rho_s = _models.random_density_from(rng, 2)
        s_rho = _kernel.von_neumann_entropy(rho_s)
        model = _models.build_random_model(2, 4, 0.02, int(rng.integers(2**62)))
        layout = model.layout
        beta = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        members = {
            "exact": _maxent.solve_exact(_maxent.Constraint(rho_s, beta, model)).joint_state,
            "perturbative": _maxent.assignment_perturbative(
                _maxent.Constraint(rho_s, beta, model)
            ).joint_state,
            "thermal": _maxent.assignment_factorized_thermal(
                _maxent.Constraint(rho_s, beta, model)
            ).joint_state,
            "uniform": _maxent.assignment_uniform(
                _maxent.Constraint(rho_s, beta, model)
            ).joint_state,
            "purification": _bounds.purify(rho_s, layout.d_b),
        }
        for name, joint in members.items():
            s_cond = _bounds.conditional_entropy(joint, layout)
            if not (-s_rho - 1e-9 <= s_cond <= np.log(layout.d_b) + 1e-9):
                in_band = False
        worst_pur = max(
            worst_pur,
            abs(_bounds.conditional_entropy(members["purification"], layout) + s_rho),
        )
        worst_uni = max(
            worst_uni,
            abs(_bounds.conditional_entropy(members["uniform"], layout) - np.log(layout.d_b)),
        )
    passed = worst_pur <= 1e-9 and worst_uni <= 1e-9 and in_band
    return _result(
        "conditional-entropy-extremes", t0, passed,
        f"|S(B|S)+S(rho)| purification {worst_pur:.2e}, |S(B|S)-log d_B| uniform "
        f"{worst_uni:.2e}, all members in band: {in_band}",
    )


def check_solver_robustness(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    n = 20 if quick else 100
    try:
        results = _exp.solver_suite(n_instances=n, seed=seed, workers=workers)
    except (_maxent.ConvergenceError, _maxent.DivergenceError) as exc:
        return _result("solver-robustness", t0, False, f"solver failure: {exc}")
    max_res = max(r[2] for r in results)
    max_iters = max(r[1] for r in results)
    passed = max_res <= 1e-10 and max_iters <= 500
    return _result(
        "solver-robustness", t0, passed,
        f"{len(results)}/{n} converged, max residual {max_res:.2e}, max iterations {max_iters}",
    )


def check_nonlinearity(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    tol = 1e-10
    rho = _models.random_density(2, np.random.SeedSequence((seed, 20)))
    sigma = _models.random_density(2, np.random.SeedSequence((seed, 21)))
    mixed = _kernel.DensityOperator.from_matrix(0.5 * rho.entries + 0.5 * sigma.entries)

    def mixture_gap(j):
        model = _models.build_jaynes_cummings(_models.JaynesCummingsParams(1.0, 1.0, j, 10))
        states = [
            _maxent.assignment_perturbative(_maxent.Constraint(r, 1.0, model)).joint_state
            for r in (mixed, rho, sigma)
        ]
        return _kernel.trace_norm(
            states[0].op - 0.5 * states[1].op - 0.5 * states[2].op
        )

    gap_coupled = mixture_gap(0.05)
    gap_free = mixture_gap(0.0)
    passed = gap_coupled > 10 * tol and gap_free <= tol
    return _result(
        "assignment-nonlinearity", t0, passed,
        f"mixture gap {gap_coupled:.2e} with coupling (> {10 * tol:.0e}), "
        f"{gap_free:.2e} without (<= {tol:.0e})",
    )


def check_entropy_maximality(quick: bool, seed: int, workers: int) -> CheckResult:
    t0 = time.monotonic()
    rng = np.random.default_rng(np.random.SeedSequence((seed, 22)))
    model = _models.build_central_spin(_models.CentralSpinParams(2, 1e-2))
    rho_s = _models.random_density_from(rng, 2)
    beta = 0.8
    c = _maxent.Constraint(rho_s, beta, model)
    sol = _maxent.solve_exact(c)
    s_me = _kernel.von_neumann_entropy(sol.joint_state)
    h = model.full().entries
    energy = float(np.trace(sol.joint_state.entries @ h).real)
    n_deform = 4 if quick else 12
    candidates = _feasible_candidates(sol.joint_state, rho_s, model, h, energy, rng, n_deform)
    candidates += [
        _project_to_feasible(
            _maxent.assignment_perturbative(c).joint_state, rho_s, model, h, energy
        ),
        _project_to_feasible(
            _maxent.assignment_factorized_thermal(c).joint_state, rho_s, model, h, energy
        ),
    ]
    margins = [s_me - _kernel.von_neumann_entropy(cand) for cand in candidates if cand is not None]
    n_used = len(margins)
    min_margin = min(margins)
    return _result(
        "entropy-maximality", t0, min_margin >= -1e-9 and n_used >= 3,
        f"min entropy margin {min_margin:.3e} over {n_used} feasible candidates",
    )


def _energy_carrier(rho_s, model, h):
    """Zero-marginal direction with nonzero energy trace, for constraint repair."""
    d_b = model.layout.d_b
    diag = np.zeros(d_b)
    diag[0], diag[1] = 1.0, -1.0
    w = np.kron(rho_s.entries, np.diag(diag).astype(complex))
    e_w = float(np.trace(w @ h).real)
    if abs(e_w) < 1e-8:
        diag = np.linspace(-1, 1, d_b)
        diag -= diag.mean()
        w = np.kron(rho_s.entries, np.diag(diag).astype(complex))
        e_w = float(np.trace(w @ h).real)
    return w, e_w


def _project_to_feasible(joint, rho_s, model, h, energy):
    """Repair marginal and energy of a candidate; None if positivity is lost."""
    layout = model.layout
    m = joint.entries.copy()
    marg_err = _kernel.partial_trace_b(joint, layout).entries - rho_s.entries
    m -= np.kron(marg_err, np.eye(layout.d_b) / layout.d_b)
    w, e_w = _energy_carrier(rho_s, model, h)
    m -= (float(np.trace(m @ h).real) - energy) / e_w * w
    m = (m + m.conj().T) / 2
    if np.linalg.eigvalsh(m)[0] < -1e-12:
        return None
    return _kernel.DensityOperator.from_matrix(m, atol=1e-9)


def _feasible_candidates(joint, rho_s, model, h, energy, rng, n):
    """Commutator deformations of the ME state kept inside the feasible set."""
    layout = model.layout
    d = layout.dim
    out = []
    base = joint.entries
    lam_min = float(np.linalg.eigvalsh(base)[0])
    w, e_w = _energy_carrier(rho_s, model, h)
    for _ in range(n):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        a = (g + g.conj().T) / 2
        delta = 1j * (base @ a - a @ base)
        marg = _kernel.partial_trace_b(_kernel.Operator(delta), layout).entries
        delta -= np.kron(marg, np.eye(layout.d_b) / layout.d_b)
        delta -= float(np.trace(delta @ h).real) / e_w * w
        delta = (delta + delta.conj().T) / 2
        scale = float(np.max(np.abs(np.linalg.eigvalsh(delta))))
        if scale < 1e-14:
            continue
        step = 0.5 * lam_min / scale
        cand = base + step * delta
        if np.linalg.eigvalsh(cand)[0] < 0:
            continue
        out.append(_kernel.DensityOperator.from_matrix(cand))
    return out


CHECKS = [
    check_kernel_partial_trace,
    check_kernel_spectral,
    check_kernel_trace_norm,
    check_kernel_entropy,
    check_jc_delta_lambda_zero,
    check_proposition_scaling_jc,
    check_proposition_scaling_central_spin,
    check_corollary1_suite,
    check_corollary2_batch,
    check_case_limits,
    check_haar_mc,
    check_conditional_entropy,
    check_solver_robustness,
    check_nonlinearity,
    check_entropy_maximality,
]


def run_checks(quick: bool = False, seed: int = 2024, workers: int = 1,
               names=None) -> list[CheckResult]:
    results = []
    for check in CHECKS:
        name = check.__name__.removeprefix("check_").replace("_", "-")
        if names and name not in names:
            continue
        results.append(check(quick, seed, workers))
    return results
