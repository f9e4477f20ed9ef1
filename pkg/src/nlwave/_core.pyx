# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stiffness quadrature kernels (see _core_py for the reference)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

cdef double EPS = 1e-13


cdef int _sort_small(double* v, int n) noexcept nogil:
    cdef int i, j
    cdef double t
    for i in range(1, n):
        t = v[i]
        j = i - 1
        while j >= 0 and v[j] > t:
            v[j + 1] = v[j]
            j -= 1
        v[j + 1] = t
    return n


cdef int _xcuts(double a, double b, double c, double d, const double[::1] bps,
                double* cuts, int* active, int* nact) noexcept nogil:
    """Fill sorted x cuts over [a, b] for element T = [c, d]."""
    cdef int m = 0, na = 0, i
    cdef double p, q
    cuts[m] = a
    m += 1
    for i in range(bps.shape[0]):
        p = bps[i]
        if a - d + EPS < p < b - c - EPS:
            active[na] = i
            na += 1
            q = p + c
            if a + EPS < q < b - EPS:
                cuts[m] = q
                m += 1
            q = p + d
            if a + EPS < q < b - EPS:
                cuts[m] = q
                m += 1
    cuts[m] = b
    m += 1
    _sort_small(cuts, m)
    nact[0] = na
    return m


def row_nodes(int K, const double[::1] nodes, const double[::1] bps, const double[::1] xg, const double[::1] wg):
    """Split-quadrature nodes (x, y, w, T) for element row K."""
    cdef int N = nodes.shape[0] - 1
    cdef int q = xg.shape[0]
    cdef int nb = bps.shape[0]
    cdef double a = nodes[K], b = nodes[K + 1], c, d
    cdef double x0, x1, hx, xq, wx, y0, y1, hy
    cdef int T, s, iq, m, na, i, ny, jy, jq
    cdef Py_ssize_t count = 0, pos = 0
    cuts_buf = np.empty(2 * nb + 2, dtype=np.float64)
    ycut_buf = np.empty(nb + 2, dtype=np.float64)
    act_buf = np.empty(nb + 1, dtype=np.intc)
    cdef double[::1] cuts = cuts_buf
    cdef double[::1] ycuts = ycut_buf
    cdef int[::1] active = act_buf

    # pass 1: count
    for T in range(N):
        c = nodes[T]
        d = nodes[T + 1]
        m = _xcuts(a, b, c, d, bps, &cuts[0], &active[0], &na)
        for s in range(m - 1):
            x0 = cuts[s]
            x1 = cuts[s + 1]
            hx = 0.5 * (x1 - x0)
            for iq in range(q):
                xq = x0 + hx * (xg[iq] + 1.0)
                ny = 0
                for i in range(na):
                    y0 = xq - bps[active[i]]
                    if c + EPS < y0 < d - EPS:
                        ny += 1
                count += (ny + 1) * q

    xs = np.empty(count, dtype=np.float64)
    ys = np.empty(count, dtype=np.float64)
    ws = np.empty(count, dtype=np.float64)
    ts = np.empty(count, dtype=np.int64)
    cdef double[::1] X = xs, Y = ys, W = ws
    cdef cnp.int64_t[::1] TT = ts

    # pass 2: fill
    for T in range(N):
        c = nodes[T]
        d = nodes[T + 1]
        m = _xcuts(a, b, c, d, bps, &cuts[0], &active[0], &na)
        for s in range(m - 1):
            x0 = cuts[s]
            x1 = cuts[s + 1]
            hx = 0.5 * (x1 - x0)
            for iq in range(q):
                xq = x0 + hx * (xg[iq] + 1.0)
                wx = hx * wg[iq]
                ny = 0
                ycuts[ny] = c
                ny += 1
                for i in range(na):
                    y0 = xq - bps[active[i]]
                    if c + EPS < y0 < d - EPS:
                        ycuts[ny] = y0
                        ny += 1
                ycuts[ny] = d
                ny += 1
                _sort_small(&ycuts[0], ny)
                for jy in range(ny - 1):
                    y0 = ycuts[jy]
                    y1 = ycuts[jy + 1]
                    hy = 0.5 * (y1 - y0)
                    for jq in range(q):
                        X[pos] = xq
                        Y[pos] = y0 + hy * (xg[jq] + 1.0)
                        W[pos] = wx * hy * wg[jq]
                        TT[pos] = T
                        pos += 1
    return xs, ys, ws, ts


def row_accumulate(const double[::1] x, const double[::1] y, const double[::1] wk, const cnp.int64_t[::1] T,
                   const double[::1] nodes, int K, int degree, bint normalized):
    """Row block sum w g(x - y) phi_i^K(x) phi_j^T(y), shape (n, N n)."""
    cdef int N = nodes.shape[0] - 1
    cdef int n = degree + 1
    cdef double a = nodes[K], b = nodes[K + 1], c, d, xi, eta, sx, sy
    cdef Py_ssize_t p, npts = x.shape[0]
    cdef int i, j, t
    out = np.zeros((n, N * n), dtype=np.float64)
    cdef double[:, ::1] B = out
    px_buf = np.empty(n, dtype=np.float64)
    py_buf = np.empty(n, dtype=np.float64)
    cdef double[::1] Px = px_buf, Py = py_buf
    cdef double hK = b - a
    for p in range(npts):
        t = <int>T[p]
        c = nodes[t]
        d = nodes[t + 1]
        xi = (2.0 * x[p] - a - b) / hK
        eta = (2.0 * y[p] - c - d) / (d - c)
        Px[0] = 1.0
        Py[0] = 1.0
        if n > 1:
            Px[1] = xi
            Py[1] = eta
        for i in range(1, n - 1):
            Px[i + 1] = ((2 * i + 1) * xi * Px[i] - i * Px[i - 1]) / (i + 1)
            Py[i + 1] = ((2 * i + 1) * eta * Py[i] - i * Py[i - 1]) / (i + 1)
        if normalized:
            for i in range(n):
                Px[i] *= sqrt((2 * i + 1) / hK)
                Py[i] *= sqrt((2 * i + 1) / (d - c))
        for i in range(n):
            sx = wk[p] * Px[i]
            for j in range(n):
                B[i, t * n + j] += sx * Py[j]
    return out
