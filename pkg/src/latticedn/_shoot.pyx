# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 shooting kernel.

Integrates ``y'' = (q(z) - lam) y`` on [0, 1] for the two fundamental
solutions S (S(0)=0, S'(0)=1) and C (C(0)=1, C'(0)=0).
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _rk4(const double[::1] qn, Py_ssize_t n, double lam, double* out) noexcept nogil:
    cdef double h = 1.0 / n
    cdef double hh = 0.5 * h
    cdef double h6 = h / 6.0
    cdef double sy = 0.0, sp = 1.0, cy = 1.0, cp = 0.0
    cdef double a, b, c
    cdef double k1y, k1p, k2y, k2p, k3y, k3p, k4y, k4p
    cdef double l1y, l1p, l2y, l2p, l3y, l3p, l4y, l4p
    cdef Py_ssize_t j
    for j in range(n):
        a = qn[2 * j] - lam
        b = qn[2 * j + 1] - lam
        c = qn[2 * j + 2] - lam
        k1y = sp
        k1p = a * sy
        k2y = sp + hh * k1p
        k2p = b * (sy + hh * k1y)
        k3y = sp + hh * k2p
        k3p = b * (sy + hh * k2y)
        k4y = sp + h * k3p
        k4p = c * (sy + h * k3y)
        l1y = cp
        l1p = a * cy
        l2y = cp + hh * l1p
        l2p = b * (cy + hh * l1y)
        l3y = cp + hh * l2p
        l3p = b * (cy + hh * l2y)
        l4y = cp + h * l3p
        l4p = c * (cy + h * l3y)
        sy = sy + h6 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        sp = sp + h6 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        cy = cy + h6 * (l1y + 2.0 * l2y + 2.0 * l3y + l4y)
        cp = cp + h6 * (l1p + 2.0 * l2p + 2.0 * l3p + l4p)
    out[0] = sy
    out[1] = sp
    out[2] = cy
    out[3] = cp


def shoot_batch(const double[::1] qnodes, const double[::1] lams):
    """Endpoint values ``(S(1), S'(1), C(1), C'(1))`` for every ``lam``.

    ``qnodes`` holds the potential at the ``2n + 1`` half-step nodes
    ``z_j = j / (2n)``.
    """
    cdef Py_ssize_t n = (qnodes.shape[0] - 1) // 2
    cdef Py_ssize_t m = lams.shape[0]
    cdef Py_ssize_t i
    out = np.empty((m, 4), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(m):
            _rk4(qnodes, n, lams[i], &o[i, 0])
    return out
