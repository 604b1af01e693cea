"""Dense complex-matrix primitives consumed by every other module.

All matrices are two-dimensional ``complex128`` numpy arrays with finite
entries.  Real input is promoted to complex; the row/column constructions
and the block factorizations downstream require complex spectral theory.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .exceptions import ShapeMismatch

__all__ = [
    "as_matrix",
    "operator_norm",
    "commutant_basis",
    "gl_param",
]

#: Relative singular-value threshold for rank decisions (commutants,
#: basis independence).  Documented once, used everywhere.
RANK_RTOL = 1e-9


def as_matrix(entries) -> np.ndarray:
    """Validate and return a 2-D complex matrix with finite entries."""
    m = np.asarray(entries)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeMismatch(f"expected a 2-D matrix, got shape {m.shape}")
    m = m.astype(complex)
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ShapeMismatch("matrix entries must be finite")
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return m.conj().T


def operator_norm(m) -> float:
    """Largest singular value of ``m`` (the norm of B(H) restricted to matrices).

    The zero matrix maps to 0.  Computed by SVD; the power-iteration
    alternative exists only as a test oracle.
    """
    return _kernels.sigma_max(as_matrix(m))


def commutant_basis(mats, rtol: float = RANK_RTOL) -> list[np.ndarray]:
    """Orthonormal basis of the commutant of a family of k x k matrices.

    Returns matrices X with X A = A X for every input A, orthonormal under
    the trace inner product tr(X* Y).  The commutant is the null space of
    the stacked linear maps X -> X A - A X; null directions are the right
    singular vectors below ``rtol`` times the largest singular value.
    Scalars always commute, so the result has dimension >= 1.
    """
    mats = [as_matrix(a) for a in mats]
    if not mats:
        raise ShapeMismatch("need at least one matrix")
    k = mats[0].shape[0]
    for a in mats:
        if a.shape != (k, k):
            raise ShapeMismatch("commutant inputs must be square of equal size")

    eye = np.eye(k)
    # Row-major vec: vec(XA - AX) = (I (x) A^T - A (x) I) vec(X).
    blocks = [np.kron(eye, a.T) - np.kron(a, eye) for a in mats]
    system = np.vstack(blocks)
    u, s, vh = np.linalg.svd(system)
    if s.size == 0 or s[0] <= 0.0:
        null = np.eye(k * k, dtype=complex)
    else:
        ncols = vh.shape[0]
        keep = s <= rtol * s[0]
        # svd returns min(rows, cols) singular values; trailing rows of a
        # full-rank-deficient system are exactly null directions too.
        null_rows = [vh[i] for i in range(len(s)) if keep[i]]
        null_rows += [vh[i] for i in range(len(s), ncols)]
        if not null_rows:
            null_rows = []
        null = np.array(null_rows).T if null_rows else np.zeros((k * k, 0))
    basis = [null[:, j].reshape(k, k) for j in range(null.shape[1])]
    if not basis:  # cannot happen: scalars always commute
        basis = [np.eye(k, dtype=complex) / np.sqrt(k)]
    return basis


def gl_param(r: int, theta) -> np.ndarray:
    """Smooth chart on invertible r x r matrices: exp of a packed matrix.

    ``theta`` has length 2 r**2; the first half fills the real part row by
    row, the second half the imaginary part.  ``gl_param(r, 0)`` is the
    identity and every value is invertible with inverse ``gl_param(r, -theta)``.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (2 * r * r,):
        raise ShapeMismatch(f"theta must have length {2 * r * r}, got {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ShapeMismatch("theta must be finite")
    t = pack_gl(r, theta)
    return _kernels.expm(t)


def pack_gl(r: int, theta: np.ndarray) -> np.ndarray:
    """Pack a real vector of length 2 r**2 into a complex r x r matrix."""
    n = r * r
    return theta[:n].reshape(r, r) + 1j * theta[n:].reshape(r, r)


def unpack_gl(t: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pack_gl`."""
    return np.concatenate([t.real.ravel(), t.imag.ravel()])
