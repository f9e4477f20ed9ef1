"""Micromodulus kernels, their 2-periodic/2-antiperiodic extensions and
the even/odd and half-wave decompositions built from them."""

import csv
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np

from .basis import BoundaryCondition, SQRT2
from .errors import DomainError
from .quadrature import QuadratureRule

_EVEN_SAMPLES = np.linspace(0.0123, 0.9871, 64)
_QUAD = QuadratureRule(order=20, max_width=0.25)


def _clean_breakpoints(points, lo=-1.0, hi=1.0):
    pts = sorted({round(float(p), 14) for p in points if lo - 1e-14 <= p <= hi + 1e-14})
    return tuple(pts)


@dataclass(frozen=True, eq=False)
class Micromodulus:
    """A kernel C on [-1, 1].

    ``func`` must be vectorized.  ``breakpoints`` lists where C or one of its
    derivatives jumps.  Values outside [-1, 1] are zero.
    """

    func: Callable
    breakpoints: tuple = ()
    is_even: bool = True
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", _clean_breakpoints(self.breakpoints))
        if self.is_even:
            defect = np.max(np.abs(self.func(_EVEN_SAMPLES) - self.func(-_EVEN_SAMPLES)))
            if defect > 1e-12:
                raise DomainError(f"kernel {self.name!r} declared even but |C(x)-C(-x)| = {defect:.3g}")
        if not np.isfinite(self.l2_norm):
            raise DomainError(f"kernel {self.name!r} is not square integrable")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= 1.0
        vals = np.where(inside, self.func(np.clip(x, -1.0, 1.0)), 0.0)
        return vals.astype(float)

    def integral(self):
        return float(_QUAD.integrate(self, -1.0, 1.0, self.breakpoints))

    @cached_property
    def l2_norm(self):
        x, w = _QUAD.nodes(-1.0, 1.0, self.breakpoints)
        return float(np.sqrt(np.sum(w * np.asarray(self.func(x), dtype=float) ** 2)))

    def describe(self):
        return {"name": self.name, **self.params}


# kernel library

def unit_box():
    """C = 1 on [-1/2, 1/2], 0 elsewhere."""
    return box(0.5, name="unitbox")


def box(delta, height=1.0, name="box"):
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"box half-width must lie in (0, 1], got {delta}")
    def f(x):
        return np.where(np.abs(x) <= delta, height, 0.0)
    return Micromodulus(f, (-delta, delta), True, name, {"delta": delta, "height": height})


def truncated_gaussian(sigma=0.25, delta=1.0):
    if sigma <= 0 or not 0.0 < delta <= 1.0:
        raise DomainError("truncated Gaussian needs sigma > 0 and 0 < delta <= 1")
    def f(x):
        return np.where(np.abs(x) <= delta, np.exp(-0.5 * (x / sigma) ** 2), 0.0)
    return Micromodulus(f, (-delta, delta), True, "gaussian", {"sigma": sigma, "delta": delta})


def constant(value=1.0):
    def f(x):
        return np.full(np.shape(x), float(value))
    return Micromodulus(f, (), True, "constant", {"value": value})


def zero():
    def f(x):
        return np.zeros(np.shape(x))
    return Micromodulus(f, (), True, "zero")


def from_table(xs, values, breakpoints=(), is_even=None, name="table"):
    """Piecewise-linear kernel through sampled points."""
    xs = np.asarray(xs, dtype=float)
    values = np.asarray(values, dtype=float)
    order = np.argsort(xs)
    xs, values = xs[order], values[order]
    if len(xs) < 2 or np.any(np.diff(xs) <= 0):
        raise DomainError("kernel table needs at least two distinct, sorted x values")
    if xs[0] < -1 - 1e-12 or xs[-1] > 1 + 1e-12:
        raise DomainError("kernel table x values must lie in [-1, 1]")
    if not np.all(np.isfinite(values)):
        raise DomainError("kernel table has non-finite values")

    def f(x):
        return np.interp(x, xs, values, left=0.0, right=0.0)

    bps = tuple(breakpoints) + tuple(xs)
    if is_even is None:
        is_even = bool(np.max(np.abs(f(_EVEN_SAMPLES) - f(-_EVEN_SAMPLES))) <= 1e-12)
    return Micromodulus(f, bps, is_even, name, {"points": len(xs)})


def load_table(path, breakpoints=(), is_even=None):
    """Read an ``x,value`` CSV (``#`` comments and a text header allowed)."""
    xs, vals = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                x, v = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if not xs:
                    continue  # header
                raise DomainError(f"bad kernel table row {row!r} in {path}") from None
            xs.append(x)
            vals.append(v)
    return from_table(xs, vals, breakpoints, is_even, name=str(path))


KERNELS = {
    "unitbox": lambda **kw: unit_box(),
    "box": lambda delta=0.5, height=1.0: box(delta, height),
    "gaussian": truncated_gaussian,
    "constant": constant,
    "zero": lambda **kw: zero(),
}


def kernel_from_spec(name, **params):
    """Build a library kernel by name, or load a CSV table when name is a path."""
    if name in KERNELS:
        try:
            return KERNELS[name](**params)
        except TypeError as exc:
            raise DomainError(f"bad parameters for kernel {name!r}: {exc}") from None
    if str(name).endswith(".csv"):
        return load_table(name, **params)
    raise DomainError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)} or a .csv table")


# extensions

class Extension(str, Enum):
    PERIODIC2 = "periodic2"
    ANTIPERIODIC2 = "antiperiodic2"


@dataclass(frozen=True, eq=False)
class ExtendedKernel:
    """2-periodic or 2-antiperiodic extension of C, evaluated on [-3, 3]."""

    base: Micromodulus
    extension: Extension

    @property
    def sign(self):
        return 1.0 if self.extension is Extension.PERIODIC2 else -1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        shifts = np.round(x / 2.0)
        r = x - 2.0 * shifts
        vals = self.base(r)
        if self.extension is Extension.ANTIPERIODIC2:
            vals = np.where(shifts.astype(int) % 2 == 0, vals, -vals)
        return vals

    @cached_property
    def breakpoints(self):
        pts = [b + 2.0 * j for b in self.base.breakpoints for j in (-1, 0, 1)]
        pts += [-3.0, -1.0, 1.0, 3.0]
        return _clean_breakpoints(pts, -3.0, 3.0)


def extend(c, mode):
    mode = Extension(mode) if not isinstance(mode, Extension) else mode
    return ExtendedKernel(c, mode)


def extension_for(bc):
    bc = BoundaryCondition.parse(bc)
    if bc is BoundaryCondition.PERIODIC:
        return Extension.PERIODIC2
    if bc is BoundaryCondition.ANTIPERIODIC:
        return Extension.ANTIPERIODIC2
    raise DomainError(f"no single extension belongs to {bc}")


# half-wave split

@dataclass(frozen=True, eq=False)
class HalfWaveSplit:
    """C = C1 + C2 with C1(1-x) = C1(x), C2(1-x) = -C2(x) on [0, 1/2].

    ``k_NC`` is the constant multiplying <e_0|u> in the canonical Neumann
    integral form.
    """

    c1: Micromodulus
    c2: Micromodulus
    k_NC: float


def half_wave_split(c):
    if not c.is_even:
        raise DomainError("half-wave split needs an even kernel")

    def c1(x):
        a = np.abs(x)
        return 0.5 * (c(a) + c(1.0 - a))

    def c2(x):
        a = np.abs(x)
        return 0.5 * (c(a) - c(1.0 - a))

    bps = [0.0]
    for b in c.breakpoints:
        bps += [b, -b, 1.0 - abs(b), abs(b) - 1.0]
    C1 = Micromodulus(c1, bps, True, f"{c.name}:C1")
    C2 = Micromodulus(c2, bps, True, f"{c.name}:C2")
    k = -0.5 * (SQRT2 - 1.0) * C1.integral() + 0.5 * (SQRT2 + 1.0) * C2.integral()
    return HalfWaveSplit(C1, C2, float(k))


# parity projections

class Parity(str, Enum):
    EVEN = "even"
    ODD = "odd"


def parity_project(u, parity):
    """(u(x) + u(-x))/2 for even, (u(x) - u(-x))/2 for odd."""
    parity = Parity(parity)
    s = 1.0 if parity is Parity.EVEN else -1.0

    def p(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (np.asarray(u(x)) + s * np.asarray(u(-x)))

    bps = tuple(getattr(u, "breakpoints", ()))
    p.breakpoints = tuple(sorted(set(bps) | {-b for b in bps}))
    return p


def silling_constant(c, bc, form=None):
    """Identity-multiple constant c.

    (1/sqrt2) int C for periodic, antiperiodic and the simple N/D forms;
    int C for the canonical Neumann and Dirichlet forms.
    """
    bc = BoundaryCondition.parse(bc)
    total = c.integral()
    canonical_nd = not bc.is_complex and (form is None or "canonical" in str(getattr(form, "value", form)))
    return total if canonical_nd else total / SQRT2
