"""Classical second-derivative operators on (-1, 1) and their eigenbases.

Periodic and antiperiodic bases are complex exponentials, Neumann and
Dirichlet bases are real cosines and sines.  Coefficient vectors use one
flat layout per boundary condition:

* periodic      k = 0, 1, -1, 2, -2, ..., M, -M
* antiperiodic  k = 0, -1, 1, -2, 2, ..., M, -M-1   (pairs sharing (k+1/2)^2)
* Neumann       k = 0, 1, ..., M
* Dirichlet     k = 1, 2, ..., M
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError
from .quadrature import QuadratureRule, breakpoints_of

SQRT2 = np.sqrt(2.0)
INV_SQRT2 = 1.0 / SQRT2


class BoundaryCondition(str, Enum):
    PERIODIC = "periodic"
    ANTIPERIODIC = "antiperiodic"
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip()
        aliases = {"p": "periodic", "a": "antiperiodic", "n": "neumann", "d": "dirichlet"}
        key = aliases.get(key.lower(), key.lower())
        try:
            return cls(key)
        except ValueError:
            raise DomainError(f"unknown boundary condition {value!r}") from None

    @property
    def is_complex(self):
        return self in (BoundaryCondition.PERIODIC, BoundaryCondition.ANTIPERIODIC)

    @property
    def short(self):
        return {"periodic": "p", "antiperiodic": "a", "neumann": "N", "dirichlet": "D"}[self.value]

    def __str__(self):
        return self.value


def _check_index(bc, k):
    if int(k) != k:
        raise DomainError(f"mode index must be an integer, got {k!r}")
    if bc is BoundaryCondition.NEUMANN and k < 0:
        raise DomainError(f"Neumann modes start at k=0, got {k}")
    if bc is BoundaryCondition.DIRICHLET and k < 1:
        raise DomainError(f"Dirichlet modes start at k=1, got {k}")


def mode_indices(bc, M):
    """Mode indices of a truncation at level ``M`` in storage order."""
    bc = BoundaryCondition.parse(bc)
    if M < 0 or (bc is BoundaryCondition.DIRICHLET and M < 1):
        raise DomainError(f"invalid truncation M={M} for {bc}")
    if bc is BoundaryCondition.PERIODIC:
        idx = np.zeros(2 * M + 1, dtype=int)
        idx[1::2] = np.arange(1, M + 1)
        idx[2::2] = -np.arange(1, M + 1)
        return idx
    if bc is BoundaryCondition.ANTIPERIODIC:
        idx = np.empty(2 * (M + 1), dtype=int)
        idx[0::2] = np.arange(0, M + 1)
        idx[1::2] = -np.arange(0, M + 1) - 1
        # storage order 0, -1, 1, -2, ...
        return idx
    if bc is BoundaryCondition.NEUMANN:
        return np.arange(0, M + 1)
    return np.arange(1, M + 1)


def frequencies(bc, k):
    """Angular frequency of e_k in x (the eigenfunction is built from it)."""
    bc = BoundaryCondition.parse(bc)
    k = np.asarray(k, dtype=float)
    if bc is BoundaryCondition.PERIODIC:
        return np.pi * k
    if bc is BoundaryCondition.ANTIPERIODIC:
        return np.pi * (k + 0.5)
    return 0.5 * np.pi * k


def eigenvalues(bc, k):
    bc = BoundaryCondition.parse(bc)
    k = np.asarray(k, dtype=float)
    if bc is BoundaryCondition.ANTIPERIODIC:
        return (k + 0.5) ** 2
    return k**2


def operator_scale(bc):
    """The constant a in A = -a d^2/dx^2."""
    bc = BoundaryCondition.parse(bc)
    return 1.0 / np.pi**2 if bc.is_complex else 4.0 / np.pi**2


def eigenfunctions(bc, k, x, derivative=0):
    """Matrix of e_k^(derivative)(x) with shape (len(k), len(x))."""
    bc = BoundaryCondition.parse(bc)
    k = np.atleast_1d(np.asarray(k))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    om = frequencies(bc, k)[:, None]
    if bc.is_complex:
        return INV_SQRT2 * (1j * om) ** derivative * np.exp(1j * om * x[None, :])
    theta = om * (x[None, :] + 1.0) + 0.5 * np.pi * derivative
    if bc is BoundaryCondition.NEUMANN:
        vals = om**derivative * np.cos(theta)
        zero = k == 0
        if np.any(zero):
            vals[zero, :] = INV_SQRT2 if derivative == 0 else 0.0
        return vals
    return om**derivative * np.sin(theta)


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue and normalized eigenfunction of A_BC for one mode index."""

    bc: BoundaryCondition
    k: int

    @property
    def eigenvalue(self):
        return float(eigenvalues(self.bc, self.k))

    def __call__(self, x):
        vals = eigenfunctions(self.bc, [self.k], x)[0]
        return vals if np.ndim(x) else vals[0]

    def derivative(self, x, order=1):
        vals = eigenfunctions(self.bc, [self.k], x, derivative=order)[0]
        return vals if np.ndim(x) else vals[0]


def eigenpair(bc, k):
    bc = BoundaryCondition.parse(bc)
    _check_index(bc, k)
    return EigenPair(bc, int(k))


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Truncated coefficients <e_k|u> in the storage order of ``mode_indices``."""

    bc: BoundaryCondition
    M: int
    coefficients: np.ndarray

    def __post_init__(self):
        bc = BoundaryCondition.parse(self.bc)
        object.__setattr__(self, "bc", bc)
        coeffs = np.asarray(self.coefficients)
        coeffs = coeffs.astype(complex if bc.is_complex else np.result_type(coeffs, float))
        n = len(mode_indices(bc, self.M))
        if coeffs.shape != (n,):
            raise DomainError(f"expected {n} coefficients for {bc} M={self.M}, got {coeffs.shape}")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def indices(self):
        return mode_indices(self.bc, self.M)

    @property
    def eigenvalues(self):
        return eigenvalues(self.bc, self.indices)

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.coefficients) ** 2)))

    def coefficient(self, k):
        pos = np.nonzero(self.indices == k)[0]
        if len(pos) == 0:
            raise DomainError(f"mode {k} not in truncation M={self.M}")
        return self.coefficients[pos[0]]

    def conjugate_symmetry_defect(self):
        """max |c_k - conj(c_partner)|; zero for coefficients of real functions."""
        c = self.coefficients
        if self.bc is BoundaryCondition.PERIODIC:
            return float(max(np.abs(c[0].imag), np.max(np.abs(c[1::2] - np.conj(c[2::2])), initial=0.0)))
        if self.bc is BoundaryCondition.ANTIPERIODIC:
            return float(np.max(np.abs(c[0::2] - np.conj(c[1::2]))))
        return 0.0

    def with_coefficients(self, coeffs):
        return CoefficientVector(self.bc, self.M, coeffs)

    def __add__(self, other):
        _check_compatible(self, other)
        return self.with_coefficients(self.coefficients + other.coefficients)

    def __sub__(self, other):
        _check_compatible(self, other)
        return self.with_coefficients(self.coefficients - other.coefficients)

    def __mul__(self, scalar):
        return self.with_coefficients(self.coefficients * scalar)

    __rmul__ = __mul__


def _check_compatible(a, b):
    if a.bc is not b.bc or a.M != b.M:
        raise DomainError(f"incompatible coefficient vectors ({a.bc}, M={a.M}) vs ({b.bc}, M={b.M})")


def zeros(bc, M):
    bc = BoundaryCondition.parse(bc)
    n = len(mode_indices(bc, M))
    return CoefficientVector(bc, M, np.zeros(n, dtype=complex if bc.is_complex else float))


def default_projection_rule(bc, M, order=16):
    """Gauss rule with 16 nodes per piece, refined to resolve mode M."""
    top = np.max(np.abs(frequencies(bc, mode_indices(bc, M))))
    return QuadratureRule(order).refined_for(top)


def project(bc, u, M, quad=None, breakpoints=()):
    """Coefficients <e_k|u> = int e_k^* u dy by composite quadrature."""
    bc = BoundaryCondition.parse(bc)
    if quad is None:
        quad = default_projection_rule(bc, M)
    bps = tuple(breakpoints) + breakpoints_of(u)
    x, w = quad.nodes(-1.0, 1.0, bps)
    vals = np.asarray(u(x))
    if not np.all(np.isfinite(vals)):
        raise DomainError("integrand produced non-finite values")
    E = eigenfunctions(bc, mode_indices(bc, M), x)
    coeffs = np.conj(E) @ (w * vals)
    if not bc.is_complex and not np.iscomplexobj(vals):
        coeffs = coeffs.real
    return CoefficientVector(bc, M, coeffs)


def synthesize(coeffs, x, derivative=0, real=None):
    """Evaluate sum_k c_k e_k(x).

    For periodic/antiperiodic bases the real part is returned when the
    coefficients are conjugate symmetric (a real function), unless ``real``
    says otherwise.
    """
    scalar = np.ndim(x) == 0
    E = eigenfunctions(coeffs.bc, coeffs.indices, x, derivative=derivative)
    vals = coeffs.coefficients @ E
    if real is None:
        real = not np.iscomplexobj(vals) or coeffs.conjugate_symmetry_defect() < 1e-9 * max(1.0, coeffs.norm())
    if real:
        vals = np.real(vals)
    return vals[0] if scalar else vals
