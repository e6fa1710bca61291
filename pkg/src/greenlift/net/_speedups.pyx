# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Fused C versions of the hot elementwise jet kernels.

Layouts and semantics match kernels_numpy exactly; see that module for the
(N, C, width) jet batch convention.  Affine layers and the tanh of the
value row stay on NumPy (BLAS/SIMD-bound already); these kernels fuse the
remaining chain-rule arithmetic, which otherwise burns its time in NumPy
temporaries.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def tanh_jet(double[:, :, ::1] A, double[:, :, ::1] Z, double[:, ::1] T,
             int m, int order):
    # T = tanh(A[:, 0, :]) precomputed by the caller
    cdef int N = A.shape[0], w = A.shape[2]
    cdef int n, i, j, k, c
    cdef double t, s1, s2
    with nogil:
        for n in range(N):
            for k in range(w):
                t = T[n, k]
                s1 = 1.0 - t * t
                if order == 2:
                    s2 = -2.0 * t * s1
                    for i in range(m):
                        for j in range(m):
                            c = 1 + m + i * m + j
                            # (Ja_i*Ja_j) first: keeps (i,j)/(j,i) bitwise equal
                            Z[n, c, k] = ((A[n, 1 + i, k] * A[n, 1 + j, k]) * s2
                                          + s1 * A[n, c, k])
                for i in range(m):
                    Z[n, 1 + i, k] = s1 * A[n, 1 + i, k]
                # value written last so Z may alias A
                Z[n, 0, k] = t


def tanh_jet_vjp(double[:, :, ::1] A, double[:, :, ::1] Zbar,
                 double[:, :, ::1] Abar, double[:, ::1] T, int m, int order):
    cdef int N = A.shape[0], w = A.shape[2]
    cdef int n, i, j, k, c
    cdef double t, s1, s2, s3, acc, acc2
    with nogil:
        for n in range(N):
            for k in range(w):
                t = T[n, k]
                s1 = 1.0 - t * t
                s2 = -2.0 * t * s1
                acc = s1 * Zbar[n, 0, k]
                for i in range(m):
                    acc += s2 * Zbar[n, 1 + i, k] * A[n, 1 + i, k]
                if order == 2:
                    s3 = -2.0 * s1 * s1 + 4.0 * (t * t) * s1
                    for i in range(m):
                        for j in range(m):
                            c = 1 + m + i * m + j
                            acc += Zbar[n, c, k] * (s3 * A[n, 1 + i, k] * A[n, 1 + j, k]
                                                    + s2 * A[n, c, k])
                Abar[n, 0, k] = acc
                for i in range(m):
                    acc2 = s1 * Zbar[n, 1 + i, k]
                    if order == 2:
                        for j in range(m):
                            acc2 += s2 * A[n, 1 + j, k] * (Zbar[n, 1 + m + i * m + j, k]
                                                           + Zbar[n, 1 + m + j * m + i, k])
                    Abar[n, 1 + i, k] = acc2
                if order == 2:
                    for c in range(1 + m, 1 + m + m * m):
                        Abar[n, c, k] = s1 * Zbar[n, c, k]
