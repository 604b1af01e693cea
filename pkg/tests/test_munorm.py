import numpy as np
import pytest

from opnorm.cbnorm import level_norm, CbOptions
from opnorm.exceptions import IdentityViolated, ShapeMismatch
from opnorm.haagerup import HaagerupOptions, haagerup_upper
from opnorm.matcore import operator_norm
from opnorm.munorm import (
    CommutingPairSample,
    MuOptions,
    MuWindow,
    mu_lower,
    mu_of_space,
    mu_upper,
    mu_window,
    pair_eval,
    random_block_quadruple,
    tensor_split_sample,
    theorem2_blocks,
)
from opnorm.opspace import (
    map_images,
    min_norm,
    space_map,
    standard_space,
    tensor_element,
    transpose_tensor,
)

FAST = MuOptions(restarts=8, iters=300, splits=5, rounds=4, inner_iters=30,
                 samples_commutant=25, samples_block=8)


def spaces():
    return standard_space("column", 2), standard_space("row", 2)


def scalar_map(img, codomain):
    sc = standard_space("scalar")
    return space_map(sc, codomain, np.asarray(img, complex).reshape(1, -1).T)


class TestTheorem2Blocks:
    def test_matrix_unit_example(self):
        # alpha1 = e12, alpha2 = e21, beta2 = e12, beta1 = e21: both
        # products equal e11
        f22 = standard_space("full", (2, 2))
        e12 = [[0, 1], [0, 0]]
        e21 = [[0, 0], [1, 0]]
        s1, s2, v, w = theorem2_blocks(
            scalar_map(e12, f22), scalar_map(e21, f22),
            scalar_map(e21, f22), scalar_map(e12, f22),
        )
        i1 = map_images(s1)[0]
        i2 = map_images(s2)[0]
        assert operator_norm(i1 @ i2 - i2 @ i1) < 1e-12
        rec = w @ (i1 @ i2) @ v
        assert np.abs(rec - np.array([[1, 0], [0, 0]])).max() < 1e-12

    def test_zero_quadruple(self):
        f22 = standard_space("full", (2, 2))
        z = np.zeros((2, 2))
        s1, s2, v, w = theorem2_blocks(
            scalar_map(z, f22), scalar_map(z, f22),
            scalar_map(z, f22), scalar_map(z, f22),
        )
        assert not np.any(map_images(s1)[0])
        assert np.abs(w @ map_images(s1)[0] @ map_images(s2)[0] @ v).max() == 0

    def test_identity_violation(self):
        f22 = standard_space("full", (2, 2))
        e12 = [[0, 1], [0, 0]]
        e21 = [[0, 0], [1, 0]]
        bad = [[0, 1e-3], [0, 0]]
        with pytest.raises(IdentityViolated):
            theorem2_blocks(
                scalar_map(e12, f22), scalar_map(e21, f22),
                scalar_map(e21, f22), scalar_map(np.add(e12, bad), f22),
            )

    def test_random_quadruples_contractive(self):
        rng = np.random.default_rng(7)
        c2, r2 = spaces()
        for _ in range(5):
            quad = random_block_quadruple(c2, r2, rng, d1=2, opts=FAST)
            s1, s2, v, w = theorem2_blocks(*quad)
            imgs1 = map_images(s1)
            imgs2 = map_images(s2)
            worst = max(
                operator_norm(a @ b - b @ a) for a in imgs1 for b in imgs2
            )
            assert worst <= 1e-10
            # contractive inputs give contractive block maps
            k = s1.codomain.ambient_rows
            lv = level_norm(s1, k, CbOptions(restarts=4, iters=200))
            assert lv.value <= 1 + 1e-8


class TestTensorSplit:
    def test_reproduces_min_norm(self):
        rng = np.random.default_rng(3)
        pool = [
            standard_space("row", 2),
            standard_space("column", 2),
            standard_space("rowcap", 2),
            standard_space("full", (2, 2)),
        ]
        for i in range(4):
            left, right = pool[i % 4], pool[(i + 2) % 4]
            c = rng.standard_normal((left.dim, right.dim)) + 1j * rng.standard_normal(
                (left.dim, right.dim))
            t = tensor_element(left, right, c)
            sample = tensor_split_sample(t)
            _, value = pair_eval(sample, t)
            assert value == pytest.approx(min_norm(t), abs=1e-10)

    def test_zero_sigma2(self):
        c2, r2 = spaces()
        t = tensor_element(c2, r2, np.eye(2))
        sample = tensor_split_sample(t)
        zero2 = space_map(r2, sample.sigma2.codomain,
                          np.zeros_like(sample.sigma2.coeffs))
        sample0 = CommutingPairSample(sample.k, sample.sigma1, zero2,
                                      sample.cb1, sample.cb2, "tensor_split")
        _, value = pair_eval(sample0, t)
        assert value == 0.0


class TestMuUpper:
    def test_column_row_identity(self):
        c2, r2 = spaces()
        t = tensor_element(c2, r2, np.eye(2))
        est = mu_upper(t, FAST)
        assert est.value <= 1 + 1e-3
        assert min_norm(t) == pytest.approx(1.0, abs=1e-12)

    def test_row_column_identity_via_transposed_half(self):
        c2, r2 = spaces()
        t = tensor_element(r2, c2, np.eye(2))
        est = mu_upper(t, FAST)
        assert est.value <= 1 + 1e-3

    def test_rank_one(self):
        rng = np.random.default_rng(4)
        c2, r2 = spaces()
        a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        t = tensor_element(c2, r2, np.outer(a, b))
        target = operator_norm(c2.realize(a)) * operator_norm(r2.realize(b))
        assert mu_upper(t, FAST).value == pytest.approx(target, abs=1e-6)

    def test_zero(self):
        c2, r2 = spaces()
        est = mu_upper(tensor_element(c2, r2, np.zeros((2, 2))), FAST)
        assert est.value == 0.0 and est.bound_kind == "exact"

    def test_dominance_by_extreme_splits(self):
        rng = np.random.default_rng(5)
        c2, r2 = spaces()
        t = tensor_element(c2, r2,
                           rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        hop = HaagerupOptions(restarts=FAST.restarts, iters=FAST.iters)
        fwd = haagerup_upper(t, hop).value
        bwd = haagerup_upper(transpose_tensor(t), hop).value
        assert mu_upper(t, FAST).value <= min(fwd, bwd) + 1e-8

    def test_transposition_symmetry(self):
        c2, r2 = spaces()
        t = tensor_element(c2, r2, np.eye(2))
        a = mu_upper(t, FAST).value
        b = mu_upper(transpose_tensor(t), FAST).value
        assert a == pytest.approx(b, abs=1e-4)


class TestMuLower:
    def test_never_below_min_norm(self):
        rng = np.random.default_rng(6)
        c2, r2 = spaces()
        t = tensor_element(c2, r2,
                           rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        est = mu_lower(t, FAST)
        assert est.value >= min_norm(t) - 1e-10

    def test_identity_pinned_by_sandwich(self):
        c2, r2 = spaces()
        t = tensor_element(c2, r2, np.eye(2))
        lo = mu_lower(t, FAST)
        up = mu_upper(t, FAST)
        assert lo.value == pytest.approx(1.0, abs=1e-9)
        assert lo.value <= up.value + 1e-6

    def test_zero(self):
        c2, r2 = spaces()
        est = mu_lower(tensor_element(c2, r2, np.zeros((2, 2))), FAST)
        assert est.value == 0.0

    def test_samples_stay_below_upper(self):
        # feasibility direction of the two-sided estimate
        rng = np.random.default_rng(8)
        c2, r2 = spaces()
        for _ in range(3):
            t = tensor_element(c2, r2,
                               rng.standard_normal((2, 2))
                               + 1j * rng.standard_normal((2, 2)))
            lo = mu_lower(t, FAST)
            up = mu_upper(t, FAST)
            assert lo.value <= up.value + 1e-6


class TestMuOfSpace:
    def test_row_and_column_windows(self):
        for kind in ("row", "column"):
            for n in (2, 3):
                win = mu_of_space(standard_space(kind, n), FAST)
                assert win.lower.value >= 1 - 1e-9
                assert win.upper.value <= 1 + 1e-2

    def test_rowcap_window(self):
        win = mu_of_space(standard_space("rowcap", 2), FAST)
        assert win.upper.value <= np.sqrt(2) + 1e-2
        assert win.lower.value >= 1 - 1e-9

    def test_window_validation(self):
        from opnorm.cbnorm import NormEstimate

        with pytest.raises(ShapeMismatch):
            MuWindow(NormEstimate(2.0, "lower"), NormEstimate(1.0, "upper"))


class TestSplitFeasibility:
    def test_random_splits_dominate_samples(self):
        # the feasibility direction: every commuting-pair evaluation is
        # bounded by the split value of every split (50 splits, 20 samples)
        rng = np.random.default_rng(9)
        c2, r2 = spaces()
        t = tensor_element(c2, r2,
                           rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        hop = HaagerupOptions(restarts=4, iters=200)

        samples = [tensor_split_sample(t)]
        opts = MuOptions(samples_commutant=12, samples_block=7, seed=3)
        oracle = mu_lower(t, opts)
        samples.append(oracle.certificate)
        sample_rng = np.random.default_rng(12)
        while len(samples) < 20:
            try:
                quad = random_block_quadruple(c2, r2, sample_rng, d1=2, opts=opts)
                s1, s2, v, w = theorem2_blocks(quad[0], quad[1], quad[2], quad[3])
            except Exception:
                continue
            from opnorm.cbnorm import NormEstimate

            one = NormEstimate(1.0, "upper")
            samples.append(CommutingPairSample(
                s1.codomain.ambient_rows, s1, s2, one, one, "theorem2_block"))
        sample_values = [pair_eval(s, t)[1] for s in samples]

        for _ in range(50):
            v = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            w = t.coeffs - v
            hv = haagerup_upper(tensor_element(c2, r2, v), hop).value
            hw = haagerup_upper(tensor_element(r2, c2, w.T), hop).value
            for val in sample_values:
                assert val <= hv + hw + 1e-6

    def test_hilbertian_witness_lower_bound(self):
        # for tensors over two column spaces the coefficient operator norm
        # is a factorization-through-Hilbert-space witness below the norm
        rng = np.random.default_rng(10)
        c2 = standard_space("column", 2)
        c3 = standard_space("column", 3)
        for _ in range(5):
            c = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
            t = tensor_element(c2, c3, c)
            sigma = float(np.linalg.svd(c, compute_uv=False)[0])
            assert sigma <= mu_upper(t, FAST).value + 1e-6
