"""Composite Gauss-Legendre quadrature with breakpoint splitting."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def gauss_legendre(order):
    """Nodes and weights of the ``order``-point rule on [-1, 1]."""
    if order < 1:
        raise ValueError("quadrature order must be positive")
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def breakpoints_of(func):
    """Declared breakpoints of a callable, empty if it declares none."""
    return tuple(getattr(func, "breakpoints", ()))


def split_interval(a, b, breakpoints=(), max_width=None):
    """Sorted cut points of [a, b] at interior breakpoints.

    Pieces wider than ``max_width`` are subdivided uniformly.
    """
    eps = 1e-13 * max(1.0, abs(a), abs(b))
    cuts = [a]
    cuts.extend(sorted(p for p in set(breakpoints) if a + eps < p < b - eps))
    cuts.append(b)
    if max_width is None:
        return np.asarray(cuts, dtype=float)
    out = [cuts[0]]
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        n = max(1, int(np.ceil((hi - lo) / max_width)))
        out.extend(np.linspace(lo, hi, n + 1)[1:])
    return np.asarray(out, dtype=float)


def composite_nodes(a, b, breakpoints=(), order=16, max_width=None):
    """Nodes and weights of a Gauss rule applied on every piece of [a, b]."""
    cuts = split_interval(a, b, breakpoints, max_width)
    xg, wg = gauss_legendre(order)
    lo, hi = cuts[:-1, None], cuts[1:, None]
    half = 0.5 * (hi - lo)
    x = (lo + half * (xg[None, :] + 1.0)).ravel()
    w = (half * wg[None, :]).ravel()
    return x, w


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule of a fixed order, split at declared breakpoints.

    ``max_width`` caps the width of each piece, which is how oscillatory
    integrands (high eigenmodes) are resolved.
    """

    order: int = 16
    max_width: float | None = None

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("quadrature order must be positive")

    def nodes(self, a, b, breakpoints=()):
        return composite_nodes(a, b, breakpoints, self.order, self.max_width)

    def integrate(self, f, a, b, breakpoints=()):
        x, w = self.nodes(a, b, tuple(breakpoints) + breakpoints_of(f))
        return np.sum(w * np.asarray(f(x)))

    def refined_for(self, frequency):
        """Copy whose pieces are short enough for ``exp(i*frequency*x)``."""
        if frequency <= 0:
            return self
        width = 6.0 / frequency
        if self.max_width is not None:
            width = min(width, self.max_width)
        return QuadratureRule(self.order, width)
