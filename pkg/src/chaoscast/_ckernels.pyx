# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Lorenz RK4 stepping and the batched permutation-test
statistic.  API mirrors the pure fallback in ``_pykernels``.
"""

from libc.math cimport sqrt, INFINITY, isfinite

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _l63_deriv(double* s, double* d,
                            double sigma, double rho, double beta) nogil:
    d[0] = sigma * (s[1] - s[0])
    d[1] = s[0] * (rho - s[2]) - s[1]
    d[2] = s[0] * s[1] - beta * s[2]


def lorenz63_trajectory(state0, double sigma, double rho, double beta,
                        double dt, long n_steps):
    """Fixed-step RK4 integration of the three-variable Lorenz system."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n_steps + 1, 3))
    cdef double s[3]
    cdef double tmp[3]
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef long t
    cdef int i
    init = np.asarray(state0, dtype=np.float64)
    for i in range(3):
        s[i] = init[i]
        out[0, i] = s[i]
    for t in range(n_steps):
        _l63_deriv(s, k1, sigma, rho, beta)
        for i in range(3):
            tmp[i] = s[i] + 0.5 * dt * k1[i]
        _l63_deriv(tmp, k2, sigma, rho, beta)
        for i in range(3):
            tmp[i] = s[i] + 0.5 * dt * k2[i]
        _l63_deriv(tmp, k3, sigma, rho, beta)
        for i in range(3):
            tmp[i] = s[i] + dt * k3[i]
        _l63_deriv(tmp, k4, sigma, rho, beta)
        for i in range(3):
            s[i] = s[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            out[t + 1, i] = s[i]
    return out


cdef void _l96_deriv(double[::1] s, double[::1] d, double forcing, int D) nogil:
    cdef int i
    for i in range(D):
        d[i] = (s[(i + 1) % D] - s[(i + D - 2) % D]) * s[(i + D - 1) % D] - s[i] + forcing


def lorenz96_trajectory(state0, double forcing, double dt, long n_steps):
    """Fixed-step RK4 integration of the D-variable Lorenz-96 system."""
    init = np.ascontiguousarray(state0, dtype=np.float64)
    cdef int D = init.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n_steps + 1, D))
    cdef double[::1] s = init.copy()
    cdef double[::1] tmp = np.empty(D)
    cdef double[::1] k1 = np.empty(D)
    cdef double[::1] k2 = np.empty(D)
    cdef double[::1] k3 = np.empty(D)
    cdef double[::1] k4 = np.empty(D)
    cdef long t
    cdef int i
    for i in range(D):
        out[0, i] = s[i]
    for t in range(n_steps):
        _l96_deriv(s, k1, forcing, D)
        for i in range(D):
            tmp[i] = s[i] + 0.5 * dt * k1[i]
        _l96_deriv(tmp, k2, forcing, D)
        for i in range(D):
            tmp[i] = s[i] + 0.5 * dt * k2[i]
        _l96_deriv(tmp, k3, forcing, D)
        for i in range(D):
            tmp[i] = s[i] + dt * k3[i]
        _l96_deriv(tmp, k4, forcing, D)
        for i in range(D):
            s[i] = s[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            out[t + 1, i] = s[i]
    return out


def skill_statistic_batch(Ms, long top_k, bint conditional=False):
    """Conditional-vs-independence statistic per binary matrix in the batch.

    Same contract as the pure fallback: returns (statistics, used_counts).
    """
    cdef cnp.ndarray[cnp.uint8_t, ndim=3] M = np.ascontiguousarray(Ms, dtype=np.uint8)
    cdef long B = M.shape[0]
    cdef long n = M.shape[1]
    cdef long s = M.shape[2]
    cdef long n_pairs = s * (s - 1) // 2
    cdef cnp.ndarray[cnp.float64_t, ndim=1] stats = np.zeros(B)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] used = np.zeros(B, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Gbuf = np.zeros((s, s))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] zbuf = np.zeros(n_pairs)
    cdef double[:, ::1] G = Gbuf
    cdef double[::1] z = zbuf
    cdef long bidx, m, i, j, nz, take, t
    cdef double gii, gjj, cp, p, acc, v
    cdef double dn = <double> n

    for bidx in range(B):
        for i in range(s):
            for j in range(i, s):
                acc = 0.0
                for m in range(n):
                    acc += M[bidx, m, i] * M[bidx, m, j]
                G[i, j] = acc
        nz = 0
        for i in range(s):
            gii = G[i, i]
            for j in range(i + 1, s):
                gjj = G[j, j]
                if conditional:
                    p = gjj / dn
                else:
                    p = (gii / dn) * (gjj / dn)
                if gii > 0.0 and p > 0.0 and p < 1.0:
                    cp = G[i, j] / gii
                    z[nz] = (cp - p) / sqrt(p * (1.0 - p) / dn)
                    nz += 1
        # descending insertion sort of the finite entries (n_pairs is small)
        for i in range(1, nz):
            v = z[i]
            j = i
            while j > 0 and z[j - 1] < v:
                z[j] = z[j - 1]
                j -= 1
            z[j] = v
        take = top_k if top_k < nz else nz
        acc = 0.0
        for t in range(take):
            acc += z[t]
        stats[bidx] = acc
        used[bidx] = take
    return stats, used
