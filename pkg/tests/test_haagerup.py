import numpy as np
import pytest

from opnorm._optim import substream
from opnorm.exceptions import ZeroTensor
from opnorm.haagerup import (
    Decomposition,
    HaagerupOptions,
    _pair_objective,
    evaluate_decomposition,
    haagerup3_upper,
    haagerup_upper,
    initial_decomposition,
    three_tensor,
    three_tensor_from_json,
    three_tensor_to_json,
)
from opnorm.matcore import gl_param, operator_norm
from opnorm.opspace import min_norm, standard_space, tensor_element, transpose_tensor

FAST = HaagerupOptions(restarts=8, iters=300)


def spaces2():
    return standard_space("column", 2), standard_space("row", 2)


def random_tensor(rng, left, right):
    c = rng.standard_normal((left.dim, right.dim)) + 1j * rng.standard_normal(
        (left.dim, right.dim)
    )
    return tensor_element(left, right, c)


class TestInitialDecomposition:
    def test_rank_one(self):
        c2, r2 = spaces2()
        rng = np.random.default_rng(0)
        a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        dec = initial_decomposition(tensor_element(c2, r2, np.outer(a, b)))
        assert dec.term_count == 1
        assert dec.reconstruction_error() < 1e-12

    def test_identity_coeffs_two_terms(self):
        c2, r2 = spaces2()
        dec = initial_decomposition(tensor_element(c2, r2, np.eye(2)))
        assert dec.term_count == 2
        assert dec.reconstruction_error() < 1e-12

    def test_svd_rank_oracle(self):
        rng = np.random.default_rng(1)
        f3 = standard_space("full", (3, 1))
        r3 = standard_space("row", 3)
        c = np.outer(rng.standard_normal(3), rng.standard_normal(3)) + np.outer(
            rng.standard_normal(3), rng.standard_normal(3)
        )
        assert np.linalg.matrix_rank(c) == 2
        dec = initial_decomposition(tensor_element(f3, r3, c))
        assert dec.term_count == 2
        assert dec.reconstruction_error() < 1e-12

    def test_zero_rejected(self):
        c2, r2 = spaces2()
        with pytest.raises(ZeroTensor):
            initial_decomposition(tensor_element(c2, r2, np.zeros((2, 2))))

    def test_rank_slack_padding(self):
        c2, r2 = spaces2()
        dec = initial_decomposition(tensor_element(c2, r2, np.eye(2)), rank_slack=2)
        assert dec.term_count == 4
        assert dec.reconstruction_error() < 1e-12


class TestPairObjectiveGradient:
    def test_finite_differences(self):
        rng = np.random.default_rng(3)
        left = standard_space("full", (2, 2))
        right = standard_space("rowcap", 2)
        t = random_tensor(rng, left, right)
        dec = initial_decomposition(t)
        vag, vonly, _ = _pair_objective(
            dec.left, dec.right, left.basis, right.basis, substream(0, 999)
        )
        r = dec.term_count
        theta0 = 0.2 * rng.standard_normal(2 * r * r)
        _, g = vag(theta0)
        h = 1e-6
        for i in rng.choice(len(theta0), 8, replace=False):
            e = np.zeros_like(theta0)
            e[i] = h
            fd = (vonly(theta0 + e) - vonly(theta0 - e)) / (2 * h)
            assert fd == pytest.approx(g[i], abs=1e-5 * max(1.0, abs(fd)))


class TestHaagerupUpper:
    def test_column_row_identity(self):
        # orthonormal a_i = e_{i1}, b_i = e_{1i}: both gram factors are the
        # identity, and the minimal norm pins the value from below
        c2, r2 = spaces2()
        t = tensor_element(c2, r2, np.eye(2))
        est = haagerup_upper(t, FAST)
        assert est.value == pytest.approx(1.0, abs=1e-4)
        assert min_norm(t) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 3])
    def test_row_column_identity_is_n(self, n):
        rn = standard_space("row", n)
        cn = standard_space("column", n)
        t = tensor_element(rn, cn, np.eye(n))
        est = haagerup_upper(t)
        assert est.value >= n - 1e-9  # any feasible value dominates the norm
        assert est.value <= n + 1e-2

    def test_rank_one_multiplicativity(self):
        rng = np.random.default_rng(5)
        c2, r2 = spaces2()
        a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        t = tensor_element(c2, r2, np.outer(a, b))
        target = operator_norm(c2.realize(a)) * operator_norm(r2.realize(b))
        assert haagerup_upper(t, FAST).value == pytest.approx(target, abs=1e-6)

    def test_zero_tensor(self):
        c2, r2 = spaces2()
        est = haagerup_upper(tensor_element(c2, r2, np.zeros((2, 2))))
        assert est.value == 0.0 and est.bound_kind == "exact"

    def test_min_norm_sandwich(self):
        rng = np.random.default_rng(6)
        pool = [
            standard_space("row", 2),
            standard_space("column", 2),
            standard_space("rowcap", 2),
            standard_space("full", (2, 2)),
        ]
        for i in range(6):
            left = pool[i % 4]
            right = pool[(i + 1) % 4]
            t = random_tensor(rng, left, right)
            est = haagerup_upper(t, FAST)
            assert min_norm(t) - 1e-8 <= est.value

    def test_certificate_reconstructs_and_reevaluates(self):
        rng = np.random.default_rng(7)
        c2, r2 = spaces2()
        t = random_tensor(rng, c2, r2)
        est = haagerup_upper(t, FAST)
        assert est.certificate.reconstruction_error() < 1e-9
        assert evaluate_decomposition(est.certificate) == pytest.approx(
            est.value, abs=1e-8
        )

    def test_reparametrization_preserves_reconstruction(self):
        rng = np.random.default_rng(8)
        c2, r2 = spaces2()
        t = random_tensor(rng, c2, r2)
        dec = haagerup_upper(t, FAST).certificate
        r = dec.term_count
        theta = rng.standard_normal(2 * r * r)
        s = gl_param(r, theta)
        sinv = gl_param(r, -theta)
        dec2 = Decomposition(s @ dec.left, sinv.T @ dec.right, t)
        assert dec2.reconstruction_error() < 1e-10

    def test_homogeneity_same_budget(self):
        rng = np.random.default_rng(9)
        c2, r2 = spaces2()
        t = random_tensor(rng, c2, r2)
        base = haagerup_upper(t, FAST).value
        for lam in (2.0, 0.25):
            scaled = tensor_element(c2, r2, lam * t.coeffs)
            assert haagerup_upper(scaled, FAST).value == pytest.approx(
                lam * base, abs=1e-6 * max(1, lam)
            )

    def test_transposition_gap(self):
        # order sensitivity: the identity tensor scores 1 in column (x) row
        # but n in row (x) column
        c2, r2 = spaces2()
        t = tensor_element(c2, r2, np.eye(2))
        fwd = haagerup_upper(t, FAST).value
        bwd = haagerup_upper(transpose_tensor(t), FAST).value
        assert bwd - fwd > 0.5

    def test_budget_starvation(self):
        c2, r2 = spaces2()
        t = tensor_element(c2, r2, np.eye(2))
        est = haagerup_upper(t, HaagerupOptions(restarts=0))
        assert est.value == float("inf")
        assert est.trace["converged"] is False


class TestThreeFold:
    def test_identity_through_scalar(self):
        c2 = standard_space("column", 2)
        r2 = standard_space("row", 2)
        sc = standard_space("scalar")
        coef = np.zeros((2, 1, 2))
        coef[0, 0, 0] = coef[1, 0, 1] = 1.0
        est = haagerup3_upper(three_tensor(c2, sc, r2, coef), FAST)
        assert est.value == pytest.approx(1.0, abs=1e-3)

    def test_scalar_homogeneity(self):
        c2 = standard_space("column", 2)
        r2 = standard_space("row", 2)
        sc = standard_space("scalar")
        coef = np.zeros((2, 1, 2))
        coef[0, 0, 0] = coef[1, 0, 1] = 1.0
        est = haagerup3_upper(three_tensor(c2, sc, r2, 3 * coef), FAST)
        assert est.value == pytest.approx(3.0, abs=1e-2)

    def test_rank_one_product(self):
        rng = np.random.default_rng(10)
        f22 = standard_space("full", (2, 2))
        sc = standard_space("scalar")
        a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        coef = np.einsum("i,j,k->ijk", a, np.array([1.5]), c)
        est = haagerup3_upper(three_tensor(f22, sc, f22, coef), FAST)
        target = (
            operator_norm(f22.realize(a)) * 1.5 * operator_norm(f22.realize(c))
        )
        assert est.value == pytest.approx(target, abs=1e-6 * target)

    def test_json_roundtrip(self):
        c2 = standard_space("column", 2)
        r2 = standard_space("row", 2)
        sc = standard_space("scalar")
        coef = np.zeros((2, 1, 2))
        coef[0, 0, 0] = coef[1, 0, 1] = 1.0
        t3 = three_tensor(c2, sc, r2, coef)
        t3b = three_tensor_from_json(three_tensor_to_json(t3))
        assert np.abs(t3b.coeffs - t3.coeffs).max() < 1e-15
