# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; same signatures as ``_fallback``."""
import numpy as np
from libc.math cimport sqrt


def triangle_gradients(const double[:, ::1] nodes, const long[:, ::1] tris):
    cdef Py_ssize_t nt = tris.shape[0], e
    cdef int k, a, b
    cdef double x0, y0, x1, y1, x2, y2, ar
    area_a = np.empty(nt)
    grads_a = np.empty((nt, 3, 2))
    cdef double[::1] area = area_a
    cdef double[:, :, ::1] g = grads_a
    cdef double px[3]
    cdef double py[3]
    for e in range(nt):
        for k in range(3):
            px[k] = nodes[tris[e, k], 0]
            py[k] = nodes[tris[e, k], 1]
        ar = 0.5 * ((px[1] - px[0]) * (py[2] - py[0]) - (py[1] - py[0]) * (px[2] - px[0]))
        area[e] = ar
        for k in range(3):
            a = (k + 1) % 3
            b = (k + 2) % 3
            g[e, k, 0] = -(py[b] - py[a]) / (2.0 * ar)
            g[e, k, 1] = (px[b] - px[a]) / (2.0 * ar)
    return area_a, grads_a


def assemble_triplets(const double[:, ::1] nodes, const long[:, ::1] tris, const double[:, ::1] sig):
    cdef Py_ssize_t nt = tris.shape[0], e, pos
    cdef int k, l
    area_a, grads_a = triangle_gradients(nodes, tris)
    cdef double[::1] area = area_a
    cdef double[:, :, ::1] g = grads_a
    rows_a = np.empty(9 * nt, dtype=np.int64)
    cols_a = np.empty(9 * nt, dtype=np.int64)
    vals_a = np.empty(9 * nt)
    cdef long[::1] rows = rows_a
    cdef long[::1] cols = cols_a
    cdef double[::1] vals = vals_a
    cdef double s11, s12, s22, sg0, sg1
    for e in range(nt):
        s11 = sig[e, 0]
        s12 = sig[e, 1]
        s22 = sig[e, 2]
        for l in range(3):
            sg0 = s11 * g[e, l, 0] + s12 * g[e, l, 1]
            sg1 = s12 * g[e, l, 0] + s22 * g[e, l, 1]
            for k in range(3):
                pos = 9 * e + 3 * k + l
                rows[pos] = tris[e, k]
                cols[pos] = tris[e, l]
                vals[pos] = area[e] * (g[e, k, 0] * sg0 + g[e, k, 1] * sg1)
    return rows_a, cols_a, vals_a


def hat_residual(const double[:, ::1] nodes, const long[:, ::1] tris, const double[:, ::1] col1,
                 const double[:, ::1] col2, Py_ssize_t nnodes):
    cdef Py_ssize_t nt = tris.shape[0], e, v
    cdef int k
    area_a, grads_a = triangle_gradients(nodes, tris)
    cdef double[::1] area = area_a
    cdef double[:, :, ::1] g = grads_a
    r_a = np.zeros((nnodes, 2))
    s_a = np.zeros(nnodes)
    cdef double[:, ::1] r = r_a
    cdef double[::1] supp = s_a
    for e in range(nt):
        for k in range(3):
            v = tris[e, k]
            r[v, 0] += area[e] * (col1[e, 0] * g[e, k, 0] + col1[e, 1] * g[e, k, 1])
            r[v, 1] += area[e] * (col2[e, 0] * g[e, k, 0] + col2[e, 1] * g[e, k, 1])
            supp[v] += area[e]
    return r_a, s_a


cdef inline void _bump(double x1, double x2, double t, double c1, double c2,
                       double* o1, double* o2) nogil:
    cdef double b = x1 * x2 * (1.0 - x1) * (1.0 - x2)
    o1[0] = x1 + t * c1 * b
    o2[0] = x2 + t * c2 * b


def bump_inverse(y, double t, double c1, double c2, double tol=1e-13, int maxit=50):
    ya = np.ascontiguousarray(y, dtype=float).reshape(-1, 2)
    cdef double[:, ::1] yv = ya
    cdef Py_ssize_t m = yv.shape[0], p
    xa = ya.copy()
    flags_a = np.zeros(m, dtype=np.int8)
    cdef double[:, ::1] x = xa
    cdef signed char[::1] flags = flags_a
    cdef int it, ls
    cdef double x1, x2, f1, f2, r1, r2, rn, gb1, gb2, j11, j12, j21, j22, det
    cdef double d1, d2, step, n1, n2, nn
    with nogil:
        for p in range(m):
            x1 = yv[p, 0]
            x2 = yv[p, 1]
            _bump(x1, x2, t, c1, c2, &f1, &f2)
            r1 = f1 - yv[p, 0]
            r2 = f2 - yv[p, 1]
            rn = sqrt(r1 * r1 + r2 * r2)
            it = 0
            while rn > tol and it < maxit:
                gb1 = x2 * (1.0 - x2) * (1.0 - 2.0 * x1)
                gb2 = x1 * (1.0 - x1) * (1.0 - 2.0 * x2)
                j11 = 1.0 + t * c1 * gb1
                j12 = t * c1 * gb2
                j21 = t * c2 * gb1
                j22 = 1.0 + t * c2 * gb2
                det = j11 * j22 - j12 * j21
                d1 = (j22 * r1 - j12 * r2) / det
                d2 = (-j21 * r1 + j11 * r2) / det
                step = 1.0
                for ls in range(30):
                    _bump(x1 - step * d1, x2 - step * d2, t, c1, c2, &f1, &f2)
                    n1 = f1 - yv[p, 0]
                    n2 = f2 - yv[p, 1]
                    nn = sqrt(n1 * n1 + n2 * n2)
                    if nn < rn:
                        break
                    step *= 0.5
                x1 = x1 - step * d1
                x2 = x2 - step * d2
                r1 = n1
                r2 = n2
                rn = nn
                it += 1
            x[p, 0] = x1
            x[p, 1] = x2
            flags[p] = 1 if rn <= tol else 0
    return xa, flags_a
