"""Concrete operator spaces, tensor elements, and the minimal tensor norm.

A concrete operator space is a linearly independent list of p x q complex
matrices spanning a subspace of the ambient matrix algebra.  Rectangular
ambients are allowed on purpose: the row space R_n lives in its natural
1 x n shape and the column space C_n in n x 1, which keeps the closed
forms for completely bounded norms free of zero padding.

Tensors over two spaces are stored as coefficient matrices over the two
bases; the ambient (Kronecker) realization is produced on demand, and the
operator norm of that realization is the minimal (spatial) tensor norm,
the universal lower bound for every norm computed by this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import DependentBasis, ShapeMismatch
from .matcore import RANK_RTOL, as_matrix

__all__ = [
    "ConcreteOperatorSpace",
    "TensorElement",
    "SpaceMap",
    "make_space",
    "standard_space",
    "tensor_element",
    "transpose_tensor",
    "ambient_matrix",
    "min_norm",
    "space_map",
    "identity_map",
    "map_images",
    "space_to_json",
    "space_from_json",
    "tensor_to_json",
    "tensor_from_json",
    "map_to_json",
    "map_from_json",
    "resolve_space",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ConcreteOperatorSpace:
    """A span of linearly independent matrices inside a matrix algebra.

    ``basis`` is an (m, p, q) array; ``kind`` tags the standard
    constructions (row/column/rowcap/full/scalar) so that closed-form
    norm paths can recognize them.  Custom spaces carry kind ``custom``.
    """

    basis: np.ndarray
    label: str
    kind: str = "custom"

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=complex)
        if basis.ndim != 3 or basis.shape[0] < 1:
            raise ShapeMismatch("basis must be a nonempty (m, p, q) array")
        if not np.all(np.isfinite(basis)):
            raise ShapeMismatch("basis entries must be finite")
        m = basis.shape[0]
        flat = basis.reshape(m, -1)
        if m > flat.shape[1]:
            raise DependentBasis(
                f"{m} matrices cannot be independent in a "
                f"{basis.shape[1]}x{basis.shape[2]} ambient"
            )
        svals = np.linalg.svd(flat, compute_uv=False)
        if svals[-1] <= RANK_RTOL * svals[0]:
            raise DependentBasis(
                f"basis of {self.label!r} is numerically dependent "
                f"(singular value ratio {svals[-1] / svals[0]:.2e})"
            )
        object.__setattr__(self, "basis", _freeze(basis))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_rows(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient_cols(self) -> int:
        return self.basis.shape[2]

    @property
    def ambient(self) -> tuple[int, int]:
        return self.basis.shape[1], self.basis.shape[2]

    def realize(self, coeffs) -> np.ndarray:
        """Ambient matrix of the element with the given basis coordinates."""
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (self.dim,):
            raise ShapeMismatch(f"expected {self.dim} coordinates, got {coeffs.shape}")
        return np.einsum("m,mpq->pq", coeffs, self.basis)

    def __repr__(self):
        p, q = self.ambient
        return f"ConcreteOperatorSpace({self.label!r}, dim={self.dim}, ambient={p}x{q})"


def make_space(basis, label: str, kind: str = "custom") -> ConcreteOperatorSpace:
    """Validate a list of equal-shape matrices into an operator space."""
    mats = [as_matrix(b) for b in basis]
    shape = mats[0].shape if mats else None
    for b in mats:
        if b.shape != shape:
            raise ShapeMismatch("basis matrices must share one shape")
    return ConcreteOperatorSpace(np.array(mats), label, kind)


def standard_space(kind: str, n=1) -> ConcreteOperatorSpace:
    """Construct one of the named standard spaces.

    row(n)      basis e_{1j} in M_{1,n}
    column(n)   basis e_{i1} in M_{n,1}
    rowcap(n)   basis diag(e_{1i}, e_{i1}) in M_{2n}; every matrix level of
                this block-diagonal sum realizes the maximum of the row and
                column norms, which is exactly the R_n cap C_n structure
    full(p,q)   all matrix units of M_{p,q}
    scalar      the 1 x 1 unit
    """
    if kind in ("row∩column", "row&column"):
        kind = "rowcap"
    if kind == "row":
        basis = np.zeros((n, 1, n), dtype=complex)
        for j in range(n):
            basis[j, 0, j] = 1.0
        return ConcreteOperatorSpace(basis, f"row:{n}", "row")
    if kind == "column":
        basis = np.zeros((n, n, 1), dtype=complex)
        for i in range(n):
            basis[i, i, 0] = 1.0
        return ConcreteOperatorSpace(basis, f"column:{n}", "column")
    if kind == "rowcap":
        basis = np.zeros((n, 2 * n, 2 * n), dtype=complex)
        for i in range(n):
            basis[i, 0, i] = 1.0          # e_{1i} in the first n x n block
            basis[i, n + i, n] = 1.0      # e_{i1} in the second n x n block
        return ConcreteOperatorSpace(basis, f"rowcap:{n}", "rowcap")
    if kind == "full":
        p, q = (n, n) if np.isscalar(n) else n
        basis = np.zeros((p * q, p, q), dtype=complex)
        for i in range(p):
            for j in range(q):
                basis[i * q + j, i, j] = 1.0
        return ConcreteOperatorSpace(basis, f"full:{p}x{q}", "full")
    if kind == "scalar":
        return ConcreteOperatorSpace(np.ones((1, 1, 1), dtype=complex), "scalar", "scalar")
    raise ShapeMismatch(f"unknown standard space kind {kind!r}")


@dataclass(frozen=True)
class TensorElement:
    """An element of E (x) F as a coefficient matrix over the two bases."""

    left: ConcreteOperatorSpace
    right: ConcreteOperatorSpace
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.left.dim, self.right.dim):
            raise ShapeMismatch(
                f"coeffs shape {c.shape} does not match dims "
                f"({self.left.dim}, {self.right.dim})"
            )
        if not np.all(np.isfinite(c)):
            raise ShapeMismatch("tensor coefficients must be finite")
        object.__setattr__(self, "coeffs", _freeze(c))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs)


def tensor_element(left, right, coeffs) -> TensorElement:
    """Validated tensor element; zero coefficients are allowed."""
    return TensorElement(left, right, coeffs)


def transpose_tensor(t: TensorElement) -> TensorElement:
    """Swap the two legs: sum x_i (x) y_i becomes sum y_i (x) x_i."""
    return TensorElement(t.right, t.left, t.coeffs.T)


def ambient_matrix(t: TensorElement) -> np.ndarray:
    """Kronecker realization sum_ij c_ij b_i (x) b'_j of the tensor."""
    p1, q1 = t.left.ambient
    p2, q2 = t.right.ambient
    m = np.einsum("ij,iab,jcd->acbd", t.coeffs, t.left.basis, t.right.basis)
    return m.reshape(p1 * p2, q1 * q2)


def min_norm(t: TensorElement) -> float:
    """Minimal (spatial) tensor norm: operator norm of the Kronecker realization.

    Exact up to SVD accuracy, and a rigorous lower bound for the Haagerup
    and commuting-pair norms of the same element.
    """
    if t.is_zero:
        return 0.0
    return _kernels.sigma_max(ambient_matrix(t))


@dataclass(frozen=True)
class SpaceMap:
    """A linear map between spaces, as a matrix over basis coordinates.

    ``coeffs`` has shape (codomain dim, domain dim): column j holds the
    codomain coordinates of the image of the j-th domain basis element.
    """

    domain: ConcreteOperatorSpace
    codomain: ConcreteOperatorSpace
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.codomain.dim, self.domain.dim):
            raise ShapeMismatch(
                f"map coeffs shape {c.shape} does not match "
                f"({self.codomain.dim}, {self.domain.dim})"
            )
        if not np.all(np.isfinite(c)):
            raise ShapeMismatch("map coefficients must be finite")
        object.__setattr__(self, "coeffs", _freeze(c))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs)


def space_map(domain, codomain, coeffs) -> SpaceMap:
    return SpaceMap(domain, codomain, coeffs)


def identity_map(space: ConcreteOperatorSpace) -> SpaceMap:
    return SpaceMap(space, space, np.eye(space.dim, dtype=complex))


def map_images(u: SpaceMap) -> np.ndarray:
    """Ambient images of the domain basis under the map, shape (m, p', q')."""
    return np.einsum("km,kpq->mpq", u.coeffs, u.codomain.basis)


# ---------------------------------------------------------------------------
# JSON wire formats (consumed by the CLI)
# ---------------------------------------------------------------------------
#
# space   {"label": str, "ambient": [p, q], "basis": [[[re, im], ...], ...]}
#         where each basis entry is a row-major list of [re, im] pairs;
#         or a named reference "row:3", "column:2", "rowcap:2",
#         "full:2x2", "scalar".
# tensor  {"left": space, "right": space, "coeffs": [[[re, im], ...], ...]}
# map     {"domain": space, "codomain": space, "coeffs": ...}


def _pairs_to_complex(data, shape=None) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ShapeMismatch("complex entries must be [re, im] pairs")
    c = arr[..., 0] + 1j * arr[..., 1]
    if shape is not None:
        c = c.reshape(shape)
    return c


def _complex_to_pairs(arr: np.ndarray):
    out = np.stack([np.asarray(arr).real, np.asarray(arr).imag], axis=-1)
    return out.tolist()


def resolve_space(ref) -> ConcreteOperatorSpace:
    """Build a space from a JSON object or a named reference string."""
    if isinstance(ref, ConcreteOperatorSpace):
        return ref
    if isinstance(ref, str):
        name, _, arg = ref.partition(":")
        if name == "scalar":
            return standard_space("scalar")
        if name in ("row", "column", "rowcap"):
            return standard_space(name, int(arg))
        if name == "full":
            p, _, q = arg.partition("x")
            return standard_space("full", (int(p), int(q)))
        raise ShapeMismatch(f"unknown space reference {ref!r}")
    return space_from_json(ref)


def space_from_json(obj) -> ConcreteOperatorSpace:
    if isinstance(obj, str):
        return resolve_space(obj)
    p, q = (int(x) for x in obj["ambient"])
    basis = [
        _pairs_to_complex(entry, shape=(p, q)).reshape(p, q) for entry in obj["basis"]
    ]
    return make_space(basis, str(obj.get("label", "space")))


def space_to_json(space: ConcreteOperatorSpace):
    if space.kind in ("row", "column", "rowcap"):
        return f"{space.kind}:{space.dim}"
    if space.kind == "scalar":
        return "scalar"
    if space.kind == "full":
        return f"full:{space.ambient_rows}x{space.ambient_cols}"
    return {
        "label": space.label,
        "ambient": list(space.ambient),
        "basis": [_complex_to_pairs(b.reshape(-1)) for b in space.basis],
    }


def tensor_from_json(obj) -> TensorElement:
    left = resolve_space(obj["left"])
    right = resolve_space(obj["right"])
    coeffs = _pairs_to_complex(obj["coeffs"])
    return tensor_element(left, right, coeffs)


def tensor_to_json(t: TensorElement):
    return {
        "left": space_to_json(t.left),
        "right": space_to_json(t.right),
        "coeffs": _complex_to_pairs(t.coeffs),
    }


def map_from_json(obj) -> SpaceMap:
    domain = resolve_space(obj["domain"])
    codomain = resolve_space(obj["codomain"])
    coeffs = _pairs_to_complex(obj["coeffs"])
    return space_map(domain, codomain, coeffs)


def map_to_json(u: SpaceMap):
    return {
        "domain": space_to_json(u.domain),
        "codomain": space_to_json(u.codomain),
        "coeffs": _complex_to_pairs(u.coeffs),
    }
