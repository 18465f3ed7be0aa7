# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled solver kernels.

Same functions and convergence rules as ``_kernels_py``; see that module
for the contract.  Each kernel runs its whole fixed-point iteration in C so
callers pay no per-sweep interpreter overhead; the dense contractions go
through BLAS.
"""

from libc.math cimport exp, fabs, log, pow

from scipy.linalg.cython_blas cimport dgemm, dgemv

import numpy as np

DEF DIVERGENCE_LIMIT = 1e15

PNORM = 0
GSOFT = 1


cdef void _backup_rows(double* p, double* x, double* t, int n_rows, int n_states) noexcept nogil:
    # t = P2 @ x for the row-major (n_rows, n_states) matrix P2
    cdef int inc = 1
    cdef double one = 1.0, zero = 0.0
    dgemv("T", &n_states, &n_rows, &one, p, &n_states, x, &inc, &zero, t, &inc)


def exact_vi(double[:, :, ::1] p, double[::1] r, double gamma,
             double threshold, int max_iterations, double[::1] v0,
             double pnorm_floor=1e-8):
    cdef int n_states = p.shape[0]
    cdef int n_actions = p.shape[1]
    cdef int n_rows = n_states * n_actions
    cdef double[::1] v = np.array(v0, dtype=np.float64)
    cdef double[::1] x = np.empty(n_states, dtype=np.float64)
    cdef double[::1] t = np.empty(n_rows, dtype=np.float64)
    cdef double residual = 0.0, best, diff, v_new
    cdef int it = 0, s, a
    cdef bint done = False

    with nogil:
        while it < max_iterations and not done:
            it += 1
            for s in range(n_states):
                x[s] = r[s] + gamma * v[s]
            _backup_rows(&p[0, 0, 0], &x[0], &t[0], n_rows, n_states)
            residual = 0.0
            for s in range(n_states):
                best = t[s * n_actions]
                for a in range(1, n_actions):
                    if t[s * n_actions + a] > best:
                        best = t[s * n_actions + a]
                v_new = best
                diff = fabs(v_new - v[s])
                if diff > residual:
                    residual = diff
                v[s] = v_new
            if residual <= threshold or not residual < DIVERGENCE_LIMIT:
                done = True
    return np.asarray(v), it, residual


def approx_vi(double[:, :, ::1] p, double[::1] r, double gamma,
              int kind, double k, double threshold, int max_iterations,
              double[::1] v0, double pnorm_floor=1e-8):
    cdef int n_states = p.shape[0]
    cdef int n_actions = p.shape[1]
    cdef int n_rows = n_states * n_actions
    cdef double[::1] v = np.array(v0, dtype=np.float64)
    cdef double[::1] x = np.empty(n_states, dtype=np.float64)
    cdef double[::1] t = np.empty(n_rows, dtype=np.float64)
    cdef double residual = 0.0, m, total, diff, v_new, entry
    cdef int it = 0, s, a, base
    cdef long clamps = 0
    cdef bint done = False

    with nogil:
        while it < max_iterations and not done:
            it += 1
            for s in range(n_states):
                x[s] = r[s] + gamma * v[s]
            _backup_rows(&p[0, 0, 0], &x[0], &t[0], n_rows, n_states)
            residual = 0.0
            for s in range(n_states):
                base = s * n_actions
                if kind == 0:
                    for a in range(n_actions):
                        if t[base + a] < pnorm_floor:
                            clamps += 1
                            t[base + a] = pnorm_floor
                m = t[base]
                for a in range(1, n_actions):
                    if t[base + a] > m:
                        m = t[base + a]
                total = 0.0
                if kind == 0:
                    for a in range(n_actions):
                        total += pow(t[base + a] / m, k)
                    v_new = m * pow(total, 1.0 / k)
                else:
                    for a in range(n_actions):
                        total += exp(k * (t[base + a] - m))
                    v_new = m + log(total) / k
                diff = fabs(v_new - v[s])
                if diff > residual:
                    residual = diff
                v[s] = v_new
            if residual <= threshold or not residual < DIVERGENCE_LIMIT:
                done = True
    return np.asarray(v), it, residual, clamps


def grad_vi(double[:, ::1] a, double[:, ::1] b, double gamma,
            double threshold, int max_iterations, double[:, ::1] dv0):
    cdef int n_states = a.shape[0]
    cdef int n_params = b.shape[1]
    cdef int n_total = n_states * n_params
    cdef double[:, ::1] dv = np.array(dv0, dtype=np.float64)
    cdef double[:, ::1] dv_new = np.empty((n_states, n_params), dtype=np.float64)
    cdef double residual = 0.0, diff, one = 1.0
    cdef int it = 0, i
    cdef bint done = False
    cdef double* dv_p
    cdef double* new_p
    cdef double* b_p
    cdef double* a_p

    dv_p = &dv[0, 0]
    new_p = &dv_new[0, 0]
    b_p = &b[0, 0]
    a_p = &a[0, 0]

    with nogil:
        while it < max_iterations and not done:
            it += 1
            # dv_new = b, then dv_new += gamma * (a @ dv) via row-major dgemm
            for i in range(n_total):
                new_p[i] = b_p[i]
            dgemm("N", "N", &n_params, &n_states, &n_states,
                  &gamma, dv_p, &n_params, a_p, &n_states,
                  &one, new_p, &n_params)
            residual = 0.0
            for i in range(n_total):
                diff = fabs(new_p[i] - dv_p[i])
                if diff > residual:
                    residual = diff
                dv_p[i] = new_p[i]
            if residual <= threshold or not residual < DIVERGENCE_LIMIT:
                done = True
    return np.asarray(dv), it, residual
