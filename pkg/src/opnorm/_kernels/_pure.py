"""Pure numpy/scipy implementation of the numerical kernels."""

import numpy as np
import scipy.linalg as sla


def sigma_max(m):
    """Largest singular value of a complex matrix (0.0 for a zero matrix)."""
    m = np.ascontiguousarray(m)
    if m.size == 0:
        return 0.0
    if not np.any(m):
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


def top_triple(m):
    """Leading singular triple and spectral gap.

    Returns ``(sigma, u, v, gap)`` with ``m @ v ~= sigma * u`` and ``gap``
    the distance to the second singular value (inf when there is none).
    """
    m = np.ascontiguousarray(m)
    u, s, vh = np.linalg.svd(m)
    gap = float(s[0] - s[1]) if s.size > 1 else float("inf")
    return float(s[0]), u[:, 0].copy(), vh[0, :].conj().copy(), gap


def expm(a):
    """Matrix exponential of a small square complex matrix."""
    return sla.expm(np.asarray(a, dtype=complex))


def dexp_adjoint(a, g):
    """Adjoint of the Frechet derivative of ``expm`` at ``a``, applied to ``g``.

    With the real inner product Re tr(X* Y), the adjoint of
    E -> d/dt expm(a + tE) is G -> L(a*, G), computed here through the
    block-triangular trick: L(b, G) is the top-right block of
    expm([[b, G], [0, b]]).
    """
    a = np.asarray(a, dtype=complex)
    g = np.asarray(g, dtype=complex)
    n = a.shape[0]
    block = np.zeros((2 * n, 2 * n), dtype=complex)
    ah = a.conj().T
    block[:n, :n] = ah
    block[n:, n:] = ah
    block[:n, n:] = g
    return sla.expm(block)[:n, n:]
