# cython: language_level=3
"""Compiled in-place density-matrix kernels.

Same contracts as ``_fallback``: ``rho`` is ``(B, D, D)`` complex128,
qubit 0 is the most significant index bit, superoperators are row-major
vectorized and carry a leading batch axis of size 1 or ``B``.
"""

cimport cython


@cython.boundscheck(False)
@cython.wraparound(False)
def apply_superop_1q(double complex[:, :, ::1] rho, const double complex[:, :, ::1] S,
                     int qubit, int n):
    cdef Py_ssize_t B = rho.shape[0]
    cdef Py_ssize_t D = rho.shape[1]
    cdef Py_ssize_t s = (<Py_ssize_t> 1) << (n - 1 - qubit)
    cdef Py_ssize_t nb = S.shape[0]
    cdef Py_ssize_t b, i, j, a, c
    cdef double complex m[16]
    cdef double complex v0, v1, v2, v3
    cdef double complex *r0
    cdef double complex *r1
    for b in range(B):
        for a in range(4):
            for c in range(4):
                m[4 * a + c] = S[b if nb > 1 else 0, a, c]
        for i in range(D):
            if i & s:
                continue
            r0 = &rho[b, i, 0]
            r1 = &rho[b, i + s, 0]
            for j in range(D):
                if j & s:
                    continue
                v0 = r0[j]
                v1 = r0[j + s]
                v2 = r1[j]
                v3 = r1[j + s]
                r0[j] = m[0] * v0 + m[1] * v1 + m[2] * v2 + m[3] * v3
                r0[j + s] = m[4] * v0 + m[5] * v1 + m[6] * v2 + m[7] * v3
                r1[j] = m[8] * v0 + m[9] * v1 + m[10] * v2 + m[11] * v3
                r1[j + s] = m[12] * v0 + m[13] * v1 + m[14] * v2 + m[15] * v3


@cython.boundscheck(False)
@cython.wraparound(False)
def apply_superop_2q(double complex[:, :, ::1] rho, const double complex[:, :, ::1] S,
                     int q0, int q1, int n):
    cdef Py_ssize_t B = rho.shape[0]
    cdef Py_ssize_t D = rho.shape[1]
    cdef Py_ssize_t s0 = (<Py_ssize_t> 1) << (n - 1 - q0)
    cdef Py_ssize_t s1 = (<Py_ssize_t> 1) << (n - 1 - q1)
    cdef Py_ssize_t mask = s0 | s1
    cdef Py_ssize_t nb = S.shape[0]
    cdef Py_ssize_t b, i, j, a, c
    cdef Py_ssize_t loc[4]
    cdef double complex m[256]
    cdef double complex v[16]
    cdef double complex acc
    cdef double complex *rows[4]
    loc[0] = 0
    loc[1] = s1
    loc[2] = s0
    loc[3] = s0 + s1
    for b in range(B):
        for a in range(16):
            for c in range(16):
                m[16 * a + c] = S[b if nb > 1 else 0, a, c]
        for i in range(D):
            if i & mask:
                continue
            for a in range(4):
                rows[a] = &rho[b, i + loc[a], 0]
            for j in range(D):
                if j & mask:
                    continue
                for a in range(16):
                    v[a] = rows[a >> 2][j + loc[a & 3]]
                for a in range(16):
                    acc = 0
                    for c in range(16):
                        acc = acc + m[16 * a + c] * v[c]
                    rows[a >> 2][j + loc[a & 3]] = acc


@cython.boundscheck(False)
@cython.wraparound(False)
def apply_depolarizing_2q(double complex[:, :, ::1] rho, double p, int q0, int q1, int n):
    cdef Py_ssize_t B = rho.shape[0]
    cdef Py_ssize_t D = rho.shape[1]
    cdef Py_ssize_t s0 = (<Py_ssize_t> 1) << (n - 1 - q0)
    cdef Py_ssize_t s1 = (<Py_ssize_t> 1) << (n - 1 - q1)
    cdef Py_ssize_t mask = s0 | s1
    cdef Py_ssize_t b, i, j, a
    cdef Py_ssize_t loc[4]
    cdef double keep = 1.0 - p
    cdef double quarter = 0.25 * p
    cdef double complex tr
    cdef double complex *rows[4]
    loc[0] = 0
    loc[1] = s1
    loc[2] = s0
    loc[3] = s0 + s1
    for b in range(B):
        for i in range(D):
            if i & mask:
                continue
            for a in range(4):
                rows[a] = &rho[b, i + loc[a], 0]
            for j in range(D):
                if j & mask:
                    continue
                # off-diagonal local blocks only shrink; the local diagonal also gains the partial trace
                tr = 0
                for a in range(4):
                    tr = tr + rows[a][j + loc[a]]
                for a in range(4):
                    rows[a][j + loc[0]] = rows[a][j + loc[0]] * keep
                    rows[a][j + loc[1]] = rows[a][j + loc[1]] * keep
                    rows[a][j + loc[2]] = rows[a][j + loc[2]] * keep
                    rows[a][j + loc[3]] = rows[a][j + loc[3]] * keep
                    rows[a][j + loc[a]] = rows[a][j + loc[a]] + quarter * tr


@cython.boundscheck(False)
@cython.wraparound(False)
def apply_diagonal(double complex[:, :, ::1] rho, const double complex[:, ::1] diag):
    cdef Py_ssize_t B = rho.shape[0]
    cdef Py_ssize_t D = rho.shape[1]
    cdef Py_ssize_t nb = diag.shape[0]
    cdef Py_ssize_t b, i, j, r
    cdef double complex di
    cdef double complex *row
    cdef const double complex *d
    for b in range(B):
        r = b if nb > 1 else 0
        d = &diag[r, 0]
        for i in range(D):
            di = d[i]
            row = &rho[b, i, 0]
            for j in range(D):
                row[j] = row[j] * (di * d[j].conjugate())


@cython.boundscheck(False)
@cython.wraparound(False)
def apply_cz(double complex[:, :, ::1] rho, int q0, int q1, int n):
    cdef Py_ssize_t B = rho.shape[0]
    cdef Py_ssize_t D = rho.shape[1]
    cdef Py_ssize_t mask = ((<Py_ssize_t> 1) << (n - 1 - q0)) | ((<Py_ssize_t> 1) << (n - 1 - q1))
    cdef Py_ssize_t b, i, j
    cdef bint ri
    cdef double complex *row
    for b in range(B):
        for i in range(D):
            ri = (i & mask) == mask
            row = &rho[b, i, 0]
            for j in range(D):
                if ri != ((j & mask) == mask):
                    row[j] = -row[j]
