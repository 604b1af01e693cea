import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opnorm.exceptions import DependentBasis, ShapeMismatch
from opnorm.matcore import operator_norm
from opnorm.opspace import (
    ambient_matrix,
    identity_map,
    make_space,
    map_from_json,
    map_images,
    map_to_json,
    min_norm,
    resolve_space,
    space_from_json,
    space_map,
    space_to_json,
    standard_space,
    tensor_element,
    tensor_from_json,
    tensor_to_json,
    transpose_tensor,
)


def unit(p, q, i, j):
    m = np.zeros((p, q), dtype=complex)
    m[i, j] = 1.0
    return m


class TestMakeSpace:
    def test_valid_two_dim(self):
        s = make_space([unit(1, 2, 0, 0), unit(1, 2, 0, 1)], "E")
        assert s.dim == 2 and s.ambient == (1, 2)

    def test_collinear_rejected(self):
        with pytest.raises(DependentBasis):
            make_space([unit(1, 1, 0, 0), 2 * unit(1, 1, 0, 0)], "bad")

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            make_space([unit(2, 2, 0, 0), unit(1, 2, 0, 1)], "bad")


class TestStandardSpaces:
    def test_row(self):
        r = standard_space("row", 3)
        assert r.dim == 3 and r.ambient == (1, 3) and r.kind == "row"
        for j, b in enumerate(r.basis):
            assert np.abs(b - unit(1, 3, 0, j)).max() == 0

    def test_column(self):
        c = standard_space("column", 2)
        assert c.dim == 2 and c.ambient == (2, 1)

    def test_rowcap_block_structure(self):
        # each basis matrix is 4x4 of operator norm 1, and the span norm is
        # the max of the row and column realizations
        e = standard_space("rowcap", 2)
        assert e.dim == 2 and e.ambient == (4, 4)
        for b in e.basis:
            assert operator_norm(b) == pytest.approx(1.0, abs=1e-12)
        rng = np.random.default_rng(0)
        x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assert operator_norm(e.realize(x)) == pytest.approx(
            np.linalg.norm(x), abs=1e-12
        )

    def test_full_and_scalar(self):
        f = standard_space("full", (2, 3))
        assert f.dim == 6 and f.ambient == (2, 3)
        s = standard_space("scalar")
        assert s.dim == 1 and s.basis[0] == pytest.approx(1.0)

    def test_hilbertian_isometry(self):
        # row/column bases carry the euclidean norm
        rng = np.random.default_rng(1)
        for kind in ("row", "column"):
            e = standard_space(kind, 4)
            x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            assert operator_norm(e.realize(x)) == pytest.approx(
                np.linalg.norm(x), abs=1e-10
            )

    def test_unknown_kind(self):
        with pytest.raises(ShapeMismatch):
            standard_space("diagonal", 2)


class TestTensorElement:
    def test_identity_coeffs(self):
        t = tensor_element(standard_space("row", 2), standard_space("column", 2), np.eye(2))
        assert t.coeffs.shape == (2, 2)

    def test_zero_allowed(self):
        t = tensor_element(standard_space("row", 2), standard_space("row", 2), np.zeros((2, 2)))
        assert t.is_zero

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            tensor_element(
                standard_space("row", 2), standard_space("row", 2), np.zeros((3, 2))
            )

    def test_transpose_involution(self):
        rng = np.random.default_rng(2)
        c = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        t = tensor_element(standard_space("row", 2), standard_space("column", 3), c)
        tt = transpose_tensor(transpose_tensor(t))
        assert np.array_equal(tt.coeffs, t.coeffs)
        assert tt.left is t.left or tt.left.label == t.left.label

    def test_transpose_coeffs(self):
        t = tensor_element(
            standard_space("row", 2), standard_space("row", 2), [[1, 2], [3, 4]]
        )
        assert np.array_equal(transpose_tensor(t).coeffs, [[1, 3], [2, 4]])


class TestMinNorm:
    def test_column_row_identity(self):
        # sum e_{i1} (x) e_{1i}: the Kronecker realization is a partial isometry
        c2, r2 = standard_space("column", 2), standard_space("row", 2)
        t = tensor_element(c2, r2, np.eye(2))
        m = ambient_matrix(t)
        assert min_norm(t) == pytest.approx(
            np.linalg.svd(m, compute_uv=False)[0], abs=1e-12
        )
        assert min_norm(t) == pytest.approx(1.0, abs=1e-12)

    def test_rank_one_multiplicativity(self):
        rng = np.random.default_rng(3)
        e = standard_space("full", (2, 2))
        f = standard_space("full", (2, 2))
        a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        b = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        t = tensor_element(e, f, np.outer(a, b))
        na = operator_norm(e.realize(a))
        nb = operator_norm(f.realize(b))
        assert min_norm(t) == pytest.approx(na * nb, rel=1e-10)

    def test_zero(self):
        t = tensor_element(standard_space("row", 2), standard_space("row", 2), np.zeros((2, 2)))
        assert min_norm(t) == 0.0

    def test_transpose_invariance(self):
        rng = np.random.default_rng(4)
        t = tensor_element(
            standard_space("full", (2, 2)),
            standard_space("column", 3),
            rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3)),
        )
        assert min_norm(transpose_tensor(t)) == pytest.approx(min_norm(t), abs=1e-10)

    def test_homogeneity(self):
        rng = np.random.default_rng(5)
        c = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        e = standard_space("row", 2)
        f = standard_space("column", 2)
        assert min_norm(tensor_element(e, f, 3.5j * c)) == pytest.approx(
            3.5 * min_norm(tensor_element(e, f, c)), rel=1e-10
        )

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=8, max_size=8),
           st.floats(-4, 4), st.floats(-4, 4))
    def test_norm_axioms_property(self, entries, lam_re, lam_im):
        e = standard_space("row", 2)
        f = standard_space("column", 2)
        arr = np.array(entries)
        c = (arr[:4] + 1j * arr[4:]).reshape(2, 2)
        lam = complex(lam_re, lam_im)
        t = tensor_element(e, f, c)
        base = min_norm(t)
        assert min_norm(tensor_element(e, f, lam * c)) == pytest.approx(
            abs(lam) * base, abs=1e-10
        )
        assert min_norm(transpose_tensor(t)) == pytest.approx(base, abs=1e-10)


class TestJson:
    def test_space_roundtrip_named(self):
        for ref in ("row:3", "column:2", "rowcap:2", "full:2x2", "scalar"):
            s = resolve_space(ref)
            assert space_to_json(s) == ref
            s2 = space_from_json(space_to_json(s))
            assert np.array_equal(s2.basis, s.basis)

    def test_space_roundtrip_custom(self):
        s = make_space([unit(2, 2, 0, 0), unit(2, 2, 1, 1)], "diag2")
        obj = space_to_json(s)
        s2 = space_from_json(obj)
        assert s2.label == "diag2"
        assert np.array_equal(s2.basis, s.basis)

    def test_tensor_roundtrip(self):
        rng = np.random.default_rng(6)
        t = tensor_element(
            standard_space("column", 2),
            standard_space("row", 2),
            rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)),
        )
        t2 = tensor_from_json(tensor_to_json(t))
        assert np.abs(t2.coeffs - t.coeffs).max() < 1e-15

    def test_map_roundtrip(self):
        u = identity_map(standard_space("rowcap", 2))
        u2 = map_from_json(map_to_json(u))
        assert np.array_equal(u2.coeffs, u.coeffs)

    def test_map_images(self):
        r2 = standard_space("row", 2)
        c2 = standard_space("column", 2)
        u = space_map(r2, c2, np.eye(2))
        imgs = map_images(u)
        assert imgs.shape == (2, 2, 1)
        assert np.abs(imgs[0] - np.array([[1], [0]])).max() == 0
