import numpy as np
import pytest

from mebath import kernel as K
from mebath.models import SIGMA_X, SIGMA_Z, random_density


def _bell_projector():
    psi = np.zeros(4, dtype=complex)
    psi[0] = psi[3] = 1 / np.sqrt(2)
    return K.Operator(np.outer(psi, psi.conj()))


def _ptrace_b_oracle(m, d_s, d_b):
    """Explicit double-loop index summation, independent of the kernel path."""
    out = np.zeros((d_s, d_s), dtype=complex)
    for s in range(d_s):
        for t in range(d_s):
            for b in range(d_b):
                out[s, t] += m[s * d_b + b, t * d_b + b]
    return out


def _ptrace_s_oracle(m, d_s, d_b):
    out = np.zeros((d_b, d_b), dtype=complex)
    for b in range(d_b):
        for c in range(d_b):
            for s in range(d_s):
                out[b, c] += m[s * d_b + b, s * d_b + c]
    return out


class TestOperator:
    def test_rejects_non_square(self):
        with pytest.raises(K.KernelError):
            K.Operator(np.zeros((2, 3)))

    def test_rejects_nan(self):
        with pytest.raises(K.KernelError):
            K.Operator([[np.nan, 0], [0, 1]])

    def test_entries_are_frozen(self):
        op = K.identity(2)
        with pytest.raises(ValueError):
            op.entries[0, 0] = 5.0

    def test_arithmetic(self):
        a = K.Operator([[1, 0], [0, 2]])
        b = K.Operator([[0, 1], [1, 0]])
        assert np.allclose((a + b).entries, [[1, 1], [1, 2]])
        assert np.allclose((2.0 * a - b).entries, [[2, -1], [-1, 4]])
        assert np.allclose((a @ b).entries, [[0, 1], [2, 0]])
        assert np.allclose(a.dag().entries, a.entries)


class TestDensityOperator:
    def test_valid_state(self):
        rho = K.DensityOperator.from_matrix([[0.5, 0], [0, 0.5]])
        assert rho.dim == 2

    def test_rejects_non_hermitian(self):
        with pytest.raises(K.HermiticityError):
            K.DensityOperator.from_matrix([[0.5, 1e-3], [0, 0.5]])

    def test_rejects_bad_trace(self):
        with pytest.raises(K.KernelError):
            K.DensityOperator.from_matrix([[0.7, 0], [0, 0.5]])

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(K.KernelError):
            K.DensityOperator.from_matrix([[1.2, 0], [0, -0.2]])

    def test_tolerance_context_loosens_positivity(self):
        m = np.diag([1.0 + 5e-10, -5e-10])
        with pytest.raises(K.KernelError):
            K.DensityOperator.from_matrix(m)
        K.DensityOperator.from_matrix(m, atol=1e-9)


class TestKron:
    def test_identity_case(self):
        assert np.allclose(K.kron(K.identity(2), K.identity(3)).entries, np.eye(6))

    def test_sigma_z_with_identity(self):
        out = K.kron(SIGMA_Z, K.identity(2))
        assert np.allclose(np.diag(out.entries), [1, 1, -1, -1])

    def test_basis_action(self):
        # (sigma_x x sigma_x) |00> = |11>
        out = K.kron(SIGMA_X, SIGMA_X)
        e00 = np.zeros(4)
        e00[0] = 1.0
        assert np.allclose(out.entries @ e00, [0, 0, 0, 1])


class TestPartialTraces:
    def test_product_reduction(self):
        layout = K.BipartiteLayout(2, 3)
        rho_s = random_density(2, 1)
        rho_b = random_density(3, 2)
        joint = K.kron(rho_s.op, rho_b.op)
        assert K.trace_norm(K.partial_trace_b(joint, layout) - rho_s.op) <= 1e-12
        assert K.trace_norm(K.partial_trace_s(joint, layout) - rho_b.op) <= 1e-12

    def test_bell_reduction(self):
        layout = K.BipartiteLayout(2, 2)
        bell = _bell_projector()
        assert np.allclose(K.partial_trace_b(bell, layout).entries, np.eye(2) / 2)
        assert np.allclose(K.partial_trace_s(bell, layout).entries, np.eye(2) / 2)

    @pytest.mark.parametrize("d_s,d_b", [(2, 2), (2, 3), (3, 2), (4, 5)])
    def test_matches_summation_oracle(self, d_s, d_b):
        rng = np.random.default_rng(d_s * 10 + d_b)
        g = rng.standard_normal((d_s * d_b,) * 2) + 1j * rng.standard_normal((d_s * d_b,) * 2)
        h = K.Operator((g + g.conj().T) / 2)
        layout = K.BipartiteLayout(d_s, d_b)
        assert np.allclose(
            K.partial_trace_b(h, layout).entries, _ptrace_b_oracle(h.entries, d_s, d_b)
        )
        assert np.allclose(
            K.partial_trace_s(h, layout).entries, _ptrace_s_oracle(h.entries, d_s, d_b)
        )

    def test_trace_preserved(self):
        layout = K.BipartiteLayout(3, 4)
        rho = random_density(12, 3)
        assert abs(K.partial_trace_b(rho, layout).trace() - 1.0) <= 1e-12

    def test_layout_mismatch(self):
        with pytest.raises(K.LayoutError):
            K.partial_trace_b(K.identity(5), K.BipartiteLayout(2, 3))


class TestHermExpm:
    def test_zero_gives_identity(self):
        assert np.allclose(K.herm_expm(K.Operator(np.zeros((3, 3)))).entries, np.eye(3))

    def test_diagonal(self):
        out = K.herm_expm(K.Operator(np.diag([0.3, -1.2])))
        assert np.allclose(out.entries, np.diag(np.exp([0.3, -1.2])))

    def test_pauli_closed_form(self):
        # e^(theta sigma_x) = cosh(theta) 1 + sinh(theta) sigma_x
        theta = 0.7
        out = K.herm_expm(theta * SIGMA_X)
        expected = np.cosh(theta) * np.eye(2) + np.sinh(theta) * SIGMA_X.entries
        assert np.allclose(out.entries, expected, atol=1e-12)

    def test_rejects_non_hermitian(self):
        with pytest.raises(K.HermiticityError):
            K.herm_expm(K.Operator([[0, 1], [0, 0]]))

    def test_positive_trace(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            d = int(rng.integers(2, 6))
            g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            assert K.herm_expm(K.Operator((g + g.conj().T) / 2)).trace().real > 0


class TestHermLogmSupport:
    def test_uniform_state(self):
        out = K.herm_logm_support(K.Operator(np.eye(4) / 4))
        assert np.allclose(out.entries, -np.log(4) * np.eye(4))

    def test_roundtrip(self):
        rng = np.random.default_rng(8)
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = (g + g.conj().T) / 2
        h *= 6.0 / np.max(np.abs(np.linalg.eigvalsh(h)))
        a = K.Operator(h)
        assert K.trace_norm(K.herm_logm_support(K.herm_expm(a)) - a) <= 1e-8

    def test_projector_clamping_structure(self):
        # log of a rank-1 projector: 0 on the support, log(floor) off it
        p = np.diag([1.0, 0.0])
        out = K.herm_logm_support(K.Operator(p), eigen_floor=1e-12)
        expected = np.log(1.0) * p + np.log(1e-12) * (np.eye(2) - p)
        assert np.allclose(out.entries, expected)

    def test_rejects_negative(self):
        with pytest.raises(K.HermiticityError):
            K.herm_logm_support(K.Operator(np.diag([1.0, -1e-6])))


class TestTraceNorm:
    def test_density_operator_is_one(self):
        for seed in range(3):
            assert abs(K.trace_norm(random_density(3, seed).op) - 1.0) <= 1e-12

    def test_sigma_z(self):
        assert abs(K.trace_norm(SIGMA_Z) - 2.0) <= 1e-14

    def test_hermitian_eigenvalue_oracle(self):
        rho = random_density(2, 11)
        sigma = random_density(2, 12)
        diff = rho.op - sigma.op
        oracle = float(np.sum(np.abs(np.linalg.eigvalsh(diff.entries))))
        assert abs(K.trace_norm(diff) - oracle) <= 1e-12


class TestEntropy:
    def test_pure_state(self):
        assert K.von_neumann_entropy(K.DensityOperator.from_matrix(np.diag([1.0, 0, 0]))) == 0.0

    def test_maximally_mixed(self):
        rho = K.DensityOperator.from_matrix(np.eye(5) / 5)
        assert abs(K.von_neumann_entropy(rho) - np.log(5)) <= 1e-12

    def test_two_level_value(self):
        # -(0.75 log 0.75 + 0.25 log 0.25), frozen from the scalar formula
        rho = K.DensityOperator.from_matrix(np.diag([0.75, 0.25]))
        assert abs(K.von_neumann_entropy(rho) - 0.5623351446188083) <= 1e-12

    def test_unitary_invariance(self):
        from mebath.bounds import haar_random_unitary

        rng = np.random.default_rng(13)
        for _ in range(10):
            rho = random_density(4, int(rng.integers(2**32)))
            u = haar_random_unitary(4, rng)
            rotated = K.DensityOperator.from_matrix(u @ rho.entries @ u.conj().T)
            assert abs(
                K.von_neumann_entropy(rotated) - K.von_neumann_entropy(rho)
            ) <= 1e-10


class TestGibbs:
    def test_beta_zero_is_uniform(self):
        out = K.gibbs_state(SIGMA_Z, 0.0)
        assert np.allclose(out.entries, np.eye(2) / 2)

    def test_two_level_populations(self):
        beta = 1.3
        out = K.gibbs_state(SIGMA_Z, beta)
        z = np.exp(-beta) + np.exp(beta)
        assert np.allclose(np.diag(out.entries), [np.exp(-beta) / z, np.exp(beta) / z])

    def test_large_spectrum_no_overflow(self):
        h = K.Operator(np.diag([-400.0, 0.0, 400.0]))
        out = K.gibbs_state(h, 1.0)
        assert abs(out.op.trace() - 1.0) <= 1e-12


class TestSerialization:
    def test_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(17)
        m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        path = tmp_path / "op.txt"
        K.save_operator(path, K.Operator(m))
        out = K.load_operator(path)
        assert np.array_equal(out.entries, m)

    def test_header_format(self, tmp_path):
        path = tmp_path / "op.txt"
        K.save_operator(path, K.identity(2))
        lines = path.read_text().splitlines()
        assert lines[0] == "dim=2"
        assert len(lines) == 3
        assert lines[1].split()[0] == "1+0i"

    def test_rejects_malformed(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("dim=2\n1+0i 0+0i\n")
        with pytest.raises(K.KernelError):
            K.load_operator(path)
