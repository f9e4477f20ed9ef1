"""Pure numpy implementation of the stiffness quadrature kernels.

Same API as the compiled ``_core`` module; selected by ``core`` when the
extension is missing or NLWAVE_PURE_PYTHON=1.
"""

import numpy as np

_EPS = 1e-13


def _inside(vals, lo, hi):
    return [v for v in vals if lo + _EPS < v < hi - _EPS]


def row_nodes(K, nodes, bps, xg, wg):
    """Split-quadrature nodes for the double integrals over K x T, all T.

    The integrand g(x - y) may jump where x - y hits a breakpoint p.  x is
    split over K where the line x - y = p enters or leaves T, and for every
    x node the y range T is split at x - p.  Returns flat arrays
    (x, y, w, T).
    """
    nodes = np.asarray(nodes, dtype=float)
    xg = np.asarray(xg, dtype=float)
    wg = np.asarray(wg, dtype=float)
    a, b = nodes[K], nodes[K + 1]
    xs, ys, ws, ts = [], [], [], []
    for T in range(len(nodes) - 1):
        c, d = nodes[T], nodes[T + 1]
        active = _inside(bps, a - d, b - c)
        xcuts = sorted({a, b, *_inside([p + c for p in active] + [p + d for p in active], a, b)})
        for x0, x1 in zip(xcuts[:-1], xcuts[1:]):
            hx = 0.5 * (x1 - x0)
            xq = x0 + hx * (xg + 1.0)
            wx = hx * wg
            mid = 0.5 * (x0 + x1)
            inner = sorted(p for p in active if c + _EPS < mid - p < d - _EPS)
            # cut columns, ordered left to right in y: c, mid - p descending in p, d
            cols = [np.full_like(xq, c)] + [xq - p for p in reversed(inner)] + [np.full_like(xq, d)]
            cuts = np.stack(cols, axis=1)
            lo, hi = cuts[:, :-1], cuts[:, 1:]
            hy = 0.5 * (hi - lo)
            y = lo[:, :, None] + hy[:, :, None] * (xg[None, None, :] + 1.0)
            w = wx[:, None, None] * hy[:, :, None] * wg[None, None, :]
            xs.append(np.broadcast_to(xq[:, None, None], y.shape).ravel())
            ys.append(y.ravel())
            ws.append(w.ravel())
            ts.append(np.full(y.size, T, dtype=np.int64))
    return np.concatenate(xs), np.concatenate(ys), np.concatenate(ws), np.concatenate(ts)


def legendre_table(xi, degree):
    """P_0..P_degree at points xi, shape (degree + 1, len(xi))."""
    xi = np.asarray(xi, dtype=float)
    P = np.empty((degree + 1, xi.size))
    P[0] = 1.0
    if degree >= 1:
        P[1] = xi
    for n in range(1, degree):
        P[n + 1] = ((2 * n + 1) * xi * P[n] - n * P[n - 1]) / (n + 1)
    return P


def row_accumulate(x, y, wk, T, nodes, K, degree, normalized):
    """Contract weighted kernel values into the row block of element K.

    Returns an array of shape (degree + 1, N (degree + 1)) with entries
    sum w g(x - y) phi_i^K(x) phi_j^T(y).
    """
    nodes = np.asarray(nodes, dtype=float)
    T = np.asarray(T, dtype=np.int64)
    N = len(nodes) - 1
    n = degree + 1
    a, b = nodes[K], nodes[K + 1]
    c, d = nodes[T], nodes[T + 1]
    Px = legendre_table((2.0 * x - a - b) / (b - a), degree)
    Py = legendre_table((2.0 * y - c - d) / (d - c), degree)
    if normalized:
        j = np.arange(n)[:, None]
        Px = Px * np.sqrt((2 * j + 1) / (b - a))
        Py = Py * np.sqrt((2 * j + 1) / (d - c)[None, :])
    block = np.zeros((n, N * n))
    for i in range(n):
        wi = wk * Px[i]
        for jj in range(n):
            block[i, jj::n] = np.bincount(T, weights=wi * Py[jj], minlength=N)
    return block
