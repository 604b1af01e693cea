import numpy as np
import pytest

from opnorm import kernels
from opnorm.exceptions import ShapeMismatch
from opnorm.matcore import as_matrix, commutant_basis, gl_param, operator_norm


def power_iteration_norm(m, iters=500, seed=0):
    """Independent oracle: power iteration on M* M."""
    m = np.asarray(m, dtype=complex)
    rng = np.random.default_rng(seed)
    h = m.conj().T @ m
    x = rng.standard_normal(h.shape[0]) + 1j * rng.standard_normal(h.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        y = h @ x
        lam = np.linalg.norm(y)
        if lam == 0:
            return 0.0
        x = y / lam
    return float(np.sqrt(lam))


def random_matrix(rng, p, q):
    return rng.standard_normal((p, q)) + 1j * rng.standard_normal((p, q))


class TestOperatorNorm:
    def test_identity(self):
        assert operator_norm(np.eye(2)) == pytest.approx(1.0, abs=1e-12)

    def test_single_singular_value(self):
        assert operator_norm([[0, 2], [0, 0]]) == pytest.approx(2.0, abs=1e-12)

    def test_zero_matrix(self):
        assert operator_norm(np.zeros((3, 2))) == 0.0

    def test_matches_power_iteration(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            m = random_matrix(rng, 4, 4)
            assert operator_norm(m) == pytest.approx(
                power_iteration_norm(m), abs=1e-10
            )

    def test_norm_axioms(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            a = random_matrix(rng, 4, 4)
            b = random_matrix(rng, 4, 4)
            lam = complex(rng.standard_normal(), rng.standard_normal())
            assert operator_norm(lam * a) == pytest.approx(
                abs(lam) * operator_norm(a), abs=1e-10
            )
            assert operator_norm(a + b) <= operator_norm(a) + operator_norm(b) + 1e-10

    def test_adjoint_invariance(self):
        rng = np.random.default_rng(4)
        m = random_matrix(rng, 3, 5)
        assert operator_norm(m) == pytest.approx(operator_norm(m.conj().T), abs=1e-12)

    def test_rejects_nonfinite(self):
        with pytest.raises(ShapeMismatch):
            operator_norm([[np.nan, 0], [0, 1]])


class TestCommutant:
    def test_diagonal_generator(self):
        basis = commutant_basis([np.diag([1.0, 2.0])])
        assert len(basis) == 2
        for x in basis:
            assert np.abs(x - np.diag(np.diag(x))).max() < 1e-10

    def test_matrix_units_trivial_commutant(self):
        units = [np.zeros((2, 2)) for _ in range(4)]
        for k, (i, j) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
            units[k][i, j] = 1.0
        basis = commutant_basis(units)
        assert len(basis) == 1
        x = basis[0]
        assert np.abs(x - x[0, 0] * np.eye(2)).max() < 1e-10

    def test_identity_generator_full_commutant(self):
        for k in (2, 3):
            assert len(commutant_basis([np.eye(k)])) == k * k

    def test_commutation_residual(self):
        rng = np.random.default_rng(11)
        mats = [rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
                for _ in range(2)]
        for x in commutant_basis(mats):
            for a in mats:
                assert operator_norm(x @ a - a @ x) <= 1e-10

    def test_generic_matrix_commutant_dimension(self):
        # distinct eigenvalues: commutant is the polynomial algebra, dim k
        rng = np.random.default_rng(13)
        for k in (2, 3, 4):
            m = random_matrix(rng, k, k)
            assert len(commutant_basis([m])) == k

    def test_orthonormal(self):
        basis = commutant_basis([np.diag([1.0, 2.0, 2.0])])
        flat = np.array([b.ravel() for b in basis])
        gram = flat.conj() @ flat.T
        assert np.abs(gram - np.eye(len(basis))).max() < 1e-10


class TestGlParam:
    def test_zero_is_identity(self):
        assert np.abs(gl_param(3, np.zeros(18)) - np.eye(3)).max() < 1e-14

    def test_always_invertible(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            theta = rng.standard_normal(8)
            assert abs(np.linalg.det(gl_param(2, theta))) > 1e-12

    def test_inverse_at_negated_parameter(self):
        # T(-theta) = -T(theta) commutes with T(theta)
        rng = np.random.default_rng(6)
        theta = rng.standard_normal(8)
        prod = gl_param(2, theta) @ gl_param(2, -theta)
        assert np.abs(prod - np.eye(2)).max() < 1e-10

    def test_bad_length(self):
        with pytest.raises(ShapeMismatch):
            gl_param(2, np.zeros(7))


class TestKernelBackends:
    @pytest.mark.parametrize("name", sorted(kernels.available_backends()))
    def test_top_triple_residual(self, name):
        mod = kernels.available_backends()[name]
        rng = np.random.default_rng(2)
        m = random_matrix(rng, 5, 3)
        s, u, v, gap = mod.top_triple(m)
        assert np.abs(m @ v - s * u).max() < 1e-10
        assert s == pytest.approx(np.linalg.svd(m, compute_uv=False)[0], abs=1e-12)

    @pytest.mark.parametrize("name", sorted(kernels.available_backends()))
    def test_expm_against_scipy(self, name):
        import scipy.linalg as sla

        mod = kernels.available_backends()[name]
        rng = np.random.default_rng(8)
        for scale in (0.01, 0.5, 4.0, 40.0):
            a = scale * random_matrix(rng, 4, 4)
            assert np.abs(mod.expm(a) - sla.expm(a)).max() < 1e-9 * max(
                1.0, np.abs(sla.expm(a)).max()
            )

    @pytest.mark.parametrize("name", sorted(kernels.available_backends()))
    def test_dexp_adjoint_pairing(self, name):
        # <Q, dexp_A(E)>_R == <dexp_adjoint(A, Q), E>_R
        import scipy.linalg as sla

        mod = kernels.available_backends()[name]
        rng = np.random.default_rng(9)
        a = random_matrix(rng, 3, 3)
        q = random_matrix(rng, 3, 3)
        e = random_matrix(rng, 3, 3)
        _, frechet = sla.expm_frechet(a, e)
        lhs = np.real(np.sum(q.conj() * frechet))
        rhs = np.real(np.sum(mod.dexp_adjoint(a, q).conj() * e))
        assert lhs == pytest.approx(rhs, rel=1e-9)
