# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels.

Same contract as ``opnorm._kernels._pure``: largest singular value,
leading singular triple, matrix exponential, and the adjoint of its
derivative.  SVD goes straight to LAPACK zgesdd; the exponential uses
Pade approximants of order matched to the input norm, with scaling and
squaring above the order-13 threshold.

All public entry points accept C-ordered complex arrays.  Internally the
row-major buffer of A is handed to LAPACK as the column-major matrix A^T;
singular values are transpose-invariant, the singular vectors swap roles,
and for the exponential every intermediate is a polynomial in the single
input (so powers commute) and the transposes cancel on output.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, log2
from scipy.linalg.cython_blas cimport zgemm
from scipy.linalg.cython_lapack cimport zgesdd, zgesv

cnp.import_array()

ctypedef double complex zcomplex


def sigma_max(m):
    """Largest singular value of a complex matrix (0.0 for a zero matrix)."""
    cdef cnp.ndarray[zcomplex, ndim=2] a = np.array(m, dtype=np.complex128, order="C")
    if a.size == 0 or not np.any(a):
        return 0.0
    # LAPACK sees the buffer as the (cols, rows) column-major transpose.
    cdef int mm = a.shape[1]
    cdef int nn = a.shape[0]
    cdef int mn = min(mm, nn)
    cdef cnp.ndarray[double, ndim=1] s = np.empty(mn, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] rwork = np.empty(max(1, 7 * mn), dtype=np.float64)
    cdef cnp.ndarray[int, ndim=1] iwork = np.empty(max(1, 8 * mn), dtype=np.intc)
    cdef int info = 0, lwork = -1
    cdef zcomplex wkopt
    cdef zcomplex* dummy = &wkopt
    zgesdd("N", &mm, &nn, &a[0, 0], &mm, &s[0], dummy, &mm, dummy, &mn,
           &wkopt, &lwork, &rwork[0], &iwork[0], &info)
    lwork = <int>wkopt.real
    cdef cnp.ndarray[zcomplex, ndim=1] work = np.empty(max(1, lwork), dtype=np.complex128)
    zgesdd("N", &mm, &nn, &a[0, 0], &mm, &s[0], dummy, &mm, dummy, &mn,
           &work[0], &lwork, &rwork[0], &iwork[0], &info)
    if info != 0:
        raise np.linalg.LinAlgError(f"zgesdd failed with info={info}")
    return float(s[0])


def top_triple(m):
    """Leading singular triple and spectral gap: (sigma, u, v, gap)."""
    cdef cnp.ndarray[zcomplex, ndim=2] a = np.array(m, dtype=np.complex128, order="C")
    cdef int rows = a.shape[0]
    cdef int cols = a.shape[1]
    cdef int mm = cols  # column-major view: B = A^T is (cols, rows)
    cdef int nn = rows
    cdef int mn = min(mm, nn)
    cdef cnp.ndarray[double, ndim=1] s = np.empty(mn, dtype=np.float64)
    cdef cnp.ndarray[zcomplex, ndim=2] ub = np.empty((mn, mm), dtype=np.complex128)
    cdef cnp.ndarray[zcomplex, ndim=2] vtb = np.empty((nn, mn), dtype=np.complex128)
    cdef int lrwork = max(1, mn * max(5 * mn + 7, 2 * max(mm, nn) + 2 * mn + 1))
    cdef cnp.ndarray[double, ndim=1] rwork = np.empty(lrwork, dtype=np.float64)
    cdef cnp.ndarray[int, ndim=1] iwork = np.empty(max(1, 8 * mn), dtype=np.intc)
    cdef int info = 0, lwork = -1
    cdef zcomplex wkopt
    zgesdd("S", &mm, &nn, &a[0, 0], &mm, &s[0], &ub[0, 0], &mm, &vtb[0, 0], &mn,
           &wkopt, &lwork, &rwork[0], &iwork[0], &info)
    lwork = <int>wkopt.real
    cdef cnp.ndarray[zcomplex, ndim=1] work = np.empty(max(1, lwork), dtype=np.complex128)
    zgesdd("S", &mm, &nn, &a[0, 0], &mm, &s[0], &ub[0, 0], &mm, &vtb[0, 0], &mn,
           &work[0], &lwork, &rwork[0], &iwork[0], &info)
    if info != 0:
        raise np.linalg.LinAlgError(f"zgesdd failed with info={info}")
    # B = A^T = U_B S V_B^H with A = U S V^H gives U = conj(V_B), V = conj(U_B).
    cdef cnp.ndarray[zcomplex, ndim=1] uvec = np.empty(rows, dtype=np.complex128)
    cdef cnp.ndarray[zcomplex, ndim=1] vvec = np.empty(cols, dtype=np.complex128)
    cdef int i
    for i in range(rows):
        # first row of V_B^H; the C-order buffer vtb is column-major (mn, nn)
        uvec[i] = vtb[i, 0]
    for i in range(cols):
        vvec[i] = ub[0, i].conjugate()
    gap = float(s[0] - s[1]) if mn > 1 else float("inf")
    return float(s[0]), uvec, vvec, gap


cdef void _zmatmul(int n, zcomplex* a, zcomplex* b, zcomplex* c) noexcept:
    """c = a @ b for n x n column-major buffers; inline below BLAS overhead."""
    cdef int i, j, k
    cdef zcomplex acc
    cdef zcomplex one = 1.0 + 0.0j
    cdef zcomplex zero = 0.0 + 0.0j
    if n <= 8:
        for j in range(n):
            for i in range(n):
                acc = zero
                for k in range(n):
                    acc = acc + a[k * n + i] * b[j * n + k]
                c[j * n + i] = acc
    else:
        zgemm("N", "N", &n, &n, &n, &one, a, &n, b, &n, &zero, c, &n)


# Higham order thresholds and numerator coefficients.
cdef double THETA3 = 1.495585217958292e-2
cdef double THETA5 = 2.539398330063230e-1
cdef double THETA7 = 9.504178996162932e-1
cdef double THETA9 = 2.097847961257068
cdef double THETA13 = 5.371920351148152

cdef double* _b3 = [120.0, 60.0, 12.0, 1.0]
cdef double* _b5 = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0]
cdef double* _b7 = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0,
                    1512.0, 56.0, 1.0]
cdef double* _b9 = [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                    30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0]
cdef double* _b13 = [64764752532480000.0, 32382376266240000.0,
                     7771770303897600.0, 1187353796428800.0,
                     129060195264000.0, 10559470521600.0, 670442572800.0,
                     33522128640.0, 1323241920.0, 40840800.0, 960960.0,
                     16380.0, 182.0, 1.0]


cdef int _expm_into(int n, zcomplex* pa, zcomplex* out) except -1:
    """exp of the column-major n x n buffer at pa, written to out.

    ``pa`` is scratch and gets overwritten when scaling applies.
    """
    cdef int i, j, k, nn = n * n
    cdef double nrm, colsum
    # 1-norm of the column-major view
    nrm = 0.0
    for j in range(n):
        colsum = 0.0
        for i in range(n):
            colsum += abs(pa[j * n + i])
        if colsum > nrm:
            nrm = colsum

    cdef int s = 0
    cdef int order
    cdef double scale
    if nrm <= THETA3:
        order = 3
    elif nrm <= THETA5:
        order = 5
    elif nrm <= THETA7:
        order = 7
    elif nrm <= THETA9:
        order = 9
    else:
        order = 13
        if nrm > THETA13:
            s = <int>ceil(log2(nrm / THETA13))
            scale = 2.0 ** (-s)
            for i in range(nn):
                pa[i] = pa[i] * scale

    cdef double* b
    if order == 3:
        b = _b3
    elif order == 5:
        b = _b5
    elif order == 7:
        b = _b7
    elif order == 9:
        b = _b9
    else:
        b = _b13

    scratch = np.empty(7 * nn, dtype=np.complex128)
    cdef zcomplex[::1] sview = scratch
    cdef zcomplex* a2 = &sview[0]
    cdef zcomplex* a4 = a2 + nn
    cdef zcomplex* a6 = a4 + nn
    cdef zcomplex* a8 = a6 + nn
    cdef zcomplex* w = a8 + nn
    cdef zcomplex* tmp = w + nn
    cdef zcomplex* u = tmp + nn

    _zmatmul(n, pa, pa, a2)
    if order >= 5:
        _zmatmul(n, a2, a2, a4)
    if order >= 7:
        _zmatmul(n, a2, a4, a6)
    if order == 9:
        _zmatmul(n, a4, a4, a8)

    # odd part w, then u = a @ w
    if order == 13:
        for i in range(nn):
            w[i] = b[13] * a6[i] + b[11] * a4[i] + b[9] * a2[i]
        _zmatmul(n, a6, w, tmp)
        for i in range(nn):
            w[i] = tmp[i] + b[7] * a6[i] + b[5] * a4[i] + b[3] * a2[i]
        for i in range(n):
            w[i * n + i] = w[i * n + i] + b[1]
    else:
        for i in range(nn):
            w[i] = b[3] * a2[i]
            if order >= 5:
                w[i] = w[i] + b[5] * a4[i]
            if order >= 7:
                w[i] = w[i] + b[7] * a6[i]
            if order == 9:
                w[i] = w[i] + b[9] * a8[i]
        for i in range(n):
            w[i * n + i] = w[i * n + i] + b[1]
    _zmatmul(n, pa, w, u)

    # even part into w
    if order == 13:
        for i in range(nn):
            w[i] = b[12] * a6[i] + b[10] * a4[i] + b[8] * a2[i]
        _zmatmul(n, a6, w, tmp)
        for i in range(nn):
            w[i] = tmp[i] + b[6] * a6[i] + b[4] * a4[i] + b[2] * a2[i]
        for i in range(n):
            w[i * n + i] = w[i * n + i] + b[0]
    else:
        for i in range(nn):
            w[i] = b[2] * a2[i]
            if order >= 5:
                w[i] = w[i] + b[4] * a4[i]
            if order >= 7:
                w[i] = w[i] + b[6] * a6[i]
            if order == 9:
                w[i] = w[i] + b[8] * a8[i]
        for i in range(n):
            w[i * n + i] = w[i * n + i] + b[0]

    # r = (v - u)^{-1} (v + u); u, v commute (polynomials in a), so the
    # transposed view solves the same left system.  lhs goes into tmp.
    for i in range(nn):
        tmp[i] = w[i] - u[i]
        out[i] = w[i] + u[i]
    ipiv = np.empty(n, dtype=np.intc)
    cdef int[::1] piv = ipiv
    cdef int info = 0
    zgesv(&n, &n, tmp, &n, &piv[0], out, &n, &info)
    if info != 0:
        raise np.linalg.LinAlgError(f"zgesv failed with info={info}")

    for k in range(s):
        _zmatmul(n, out, out, tmp)
        for i in range(nn):
            out[i] = tmp[i]
    return 0


def expm(m):
    """Matrix exponential; Pade order adapted to the norm of the input."""
    cdef cnp.ndarray[zcomplex, ndim=2] a = np.array(m, dtype=np.complex128, order="C")
    cdef int n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError("expm needs a square matrix")
    if n == 1:
        return np.array([[np.exp(complex(a[0, 0]))]], dtype=np.complex128)
    cdef cnp.ndarray[zcomplex, ndim=2] out = np.empty((n, n), dtype=np.complex128)
    _expm_into(n, &a[0, 0], &out[0, 0])
    return out


def dexp_adjoint(a, g):
    """Adjoint of the Frechet derivative of expm at ``a`` applied to ``g``.

    Computed as the top-right block of expm([[a*, g], [0, a*]]).
    """
    cdef cnp.ndarray[zcomplex, ndim=2] ab = np.ascontiguousarray(a, dtype=np.complex128)
    cdef cnp.ndarray[zcomplex, ndim=2] gb = np.ascontiguousarray(g, dtype=np.complex128)
    cdef int n = ab.shape[0]
    cdef int m = 2 * n
    cdef cnp.ndarray[zcomplex, ndim=2] block = np.zeros((m, m), dtype=np.complex128)
    cdef cnp.ndarray[zcomplex, ndim=2] eblock = np.empty((m, m), dtype=np.complex128)
    cdef int i, j
    for i in range(n):
        for j in range(n):
            block[i, j] = ab[j, i].conjugate()
            block[n + i, n + j] = ab[j, i].conjugate()
            block[i, n + j] = gb[i, j]
    _expm_into(m, &block[0, 0], &eblock[0, 0])
    cdef cnp.ndarray[zcomplex, ndim=2] out = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            out[i, j] = eblock[i, n + j]
    return out
