# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the two hot loops.

``forward_sweep`` is the node-by-node product-trapezoid march for a Volterra
equation whose kernel factors as ``C(x) B(x')``; ``subset_terms`` enumerates
the fixed-size subset products behind the closed-form Wiener-Hopf
determinant.  Both mirror :mod:`semisep._fallback` operation for operation.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs
from libc.stdlib cimport free, malloc

cnp.import_array()


cdef inline double cabs1(double complex z) nogil:
    return fabs(z.real) + fabs(z.imag)


cdef int _solve_inplace(double complex* M, double complex* R, int m, int p) nogil:
    """Gaussian elimination with partial pivoting; ``R`` is overwritten by M^{-1} R."""
    cdef int col, row, piv, j, k
    cdef double best, val
    cdef double complex tmp, fac
    for col in range(m):
        piv = col
        best = cabs1(M[col * m + col])
        for row in range(col + 1, m):
            val = cabs1(M[row * m + col])
            if val > best:
                best = val
                piv = row
        if best == 0.0:
            return -1
        if piv != col:
            for j in range(m):
                tmp = M[col * m + j]
                M[col * m + j] = M[piv * m + j]
                M[piv * m + j] = tmp
            for j in range(p):
                tmp = R[col * p + j]
                R[col * p + j] = R[piv * p + j]
                R[piv * p + j] = tmp
        for row in range(col + 1, m):
            fac = M[row * m + col] / M[col * m + col]
            if fac != 0:
                for j in range(col, m):
                    M[row * m + j] = M[row * m + j] - fac * M[col * m + j]
                for j in range(p):
                    R[row * p + j] = R[row * p + j] - fac * R[col * p + j]
    for col in range(m - 1, -1, -1):
        for j in range(p):
            tmp = R[col * p + j]
            for k in range(col + 1, m):
                tmp = tmp - M[col * m + k] * R[k * p + j]
            R[col * p + j] = tmp / M[col * m + col]
    return 0


def forward_sweep(const double complex[:, :, ::1] C,
                  const double complex[:, :, ::1] B,
                  const double complex[:, :, ::1] F,
                  const double[::1] dx,
                  double complex alpha):
    """March ``y(x) = F(x) + alpha * C(x) * int_a^x B(s) y(s) ds`` left to right.

    Returns ``(y, S)`` with ``S[k]`` the trapezoid accumulation of ``B y`` up
    to node ``k``.
    """
    cdef Py_ssize_t N = C.shape[0]
    cdef int m = <int>C.shape[1]
    cdef int n = <int>C.shape[2]
    cdef int p = <int>F.shape[2]
    cdef Py_ssize_t k
    cdef int i, j, l, info = 0
    cdef double complex half, acc

    y_arr = np.zeros((N, m, p), dtype=np.complex128)
    S_arr = np.zeros((N, n, p), dtype=np.complex128)
    cdef double complex[:, :, ::1] y = y_arr
    cdef double complex[:, :, ::1] S = S_arr
    if N == 0:
        return y_arr, S_arr

    cdef double complex* Q = <double complex*>malloc(n * p * sizeof(double complex))
    cdef double complex* M = <double complex*>malloc(m * m * sizeof(double complex))
    cdef double complex* R = <double complex*>malloc(m * p * sizeof(double complex))
    if Q == NULL or M == NULL or R == NULL:
        free(Q); free(M); free(R)
        raise MemoryError()

    with nogil:
        for i in range(m):
            for j in range(p):
                y[0, i, j] = F[0, i, j]
        for k in range(1, N):
            half = 0.5 * dx[k - 1]
            # Q = S[k-1] + (h/2) B[k-1] y[k-1]
            for i in range(n):
                for j in range(p):
                    acc = 0
                    for l in range(m):
                        acc = acc + B[k - 1, i, l] * y[k - 1, l, j]
                    Q[i * p + j] = S[k - 1, i, j] + half * acc
            # R = F[k] + alpha C[k] Q
            for i in range(m):
                for j in range(p):
                    acc = 0
                    for l in range(n):
                        acc = acc + C[k, i, l] * Q[l * p + j]
                    R[i * p + j] = F[k, i, j] + alpha * acc
            # M = I - alpha (h/2) C[k] B[k]
            for i in range(m):
                for j in range(m):
                    acc = 0
                    for l in range(n):
                        acc = acc + C[k, i, l] * B[k, l, j]
                    M[i * m + j] = -alpha * half * acc
                M[i * m + i] = M[i * m + i] + 1.0
            if _solve_inplace(M, R, m, p) != 0:
                info = <int>k
                break
            for i in range(m):
                for j in range(p):
                    y[k, i, j] = R[i * p + j]
            # S[k] = Q + (h/2) B[k] y[k]
            for i in range(n):
                for j in range(p):
                    acc = 0
                    for l in range(m):
                        acc = acc + B[k, i, l] * y[k, l, j]
                    S[k, i, j] = Q[i * p + j] + half * acc

    free(Q); free(M); free(R)
    if info:
        raise np.linalg.LinAlgError(f"singular implicit step at node {info}")
    return y_arr, S_arr


def subset_terms(const double complex[::1] a,
                 const double complex[::1] b,
                 const double complex[:, ::1] P,
                 int size):
    """Products over all ``size``-subsets S of range(N), lexicographic order.

    term(S) = prod_{s in S} a[s] * prod_{t not in S} b[t] * prod_{s in S, t not in S} P[s, t]
    """
    cdef int N = <int>a.shape[0]
    cdef int r = size
    cdef Py_ssize_t count, pos = 0
    cdef int i, j, t
    cdef double complex term

    from math import comb
    count = comb(N, r)
    out_arr = np.empty(count, dtype=np.complex128)
    cdef double complex[::1] out = out_arr

    cdef int* idx = <int*>malloc((r + 1) * sizeof(int))
    cdef char* member = <char*>malloc((N + 1) * sizeof(char))
    if idx == NULL or member == NULL:
        free(idx); free(member)
        raise MemoryError()

    with nogil:
        for i in range(r):
            idx[i] = i
        while True:
            for t in range(N):
                member[t] = 0
            for i in range(r):
                member[idx[i]] = 1
            term = 1
            for t in range(N):
                if member[t]:
                    term = term * a[t]
                    for j in range(N):
                        if not member[j]:
                            term = term * P[t, j]
                else:
                    term = term * b[t]
            out[pos] = term
            pos += 1
            # next combination in lexicographic order
            i = r - 1
            while i >= 0 and idx[i] == N - r + i:
                i -= 1
            if i < 0:
                break
            idx[i] += 1
            for j in range(i + 1, r):
                idx[j] = idx[j - 1] + 1

    free(idx); free(member)
    return out_arr
