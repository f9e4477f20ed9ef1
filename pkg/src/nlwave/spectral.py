"""Abstract convolutions, regulating functions and exact series solutions.

An operator form fixes how c - C* is realized for a boundary condition:

* canonical_periodic / canonical_antiperiodic: phi_k = c - <e_k|C>,
  c = (1/sqrt2) int C
* canonical_neumann / canonical_dirichlet: phi_k = c - <e_k|C> in the
  cosine/sine basis, c = int C
* simple_neumann / simple_dirichlet:
  sqrt2 [(c - C*_p) P_even + (c - C*_a) P_odd]  (Neumann), with P_even and
  P_odd swapped for Dirichlet, c = (1/sqrt2) int C.  In the N/D basis this
  is diagonal with phi_k = sqrt2 (c - <e^p_{k/2}|C>) for even k and
  sqrt2 (c - <e^a_{(k-1)/2}|C>) for odd k.
"""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
from scipy.integrate import quad_vec

from .basis import (
    BoundaryCondition,
    CoefficientVector,
    SQRT2,
    INV_SQRT2,
    eigenfunctions,
    eigenvalues,
    mode_indices,
    project,
    synthesize,
)
from .errors import DomainError
from .micromodulus import (
    Extension,
    extend,
    half_wave_split,
    parity_project,
    silling_constant,
)
from .quadrature import QuadratureRule, breakpoints_of

BC = BoundaryCondition
DEFAULT_M = 256


class OperatorForm(str, Enum):
    CANONICAL_PERIODIC = "canonical_periodic"
    CANONICAL_ANTIPERIODIC = "canonical_antiperiodic"
    CANONICAL_NEUMANN = "canonical_neumann"
    CANONICAL_DIRICHLET = "canonical_dirichlet"
    SIMPLE_NEUMANN = "simple_neumann"
    SIMPLE_DIRICHLET = "simple_dirichlet"

    @property
    def bc(self):
        return BC(self.value.split("_", 1)[1])

    @property
    def is_simple(self):
        return self.value.startswith("simple")

    @property
    def conv_scale(self):
        """Factor in front of the convolution part of the operator."""
        return SQRT2 if self.is_simple else 1.0

    @classmethod
    def resolve(cls, bc, form=None):
        """Form for ``bc``; ``form`` may be a full name, 'canonical', 'simple' or None.

        None picks the experiment convention: canonical for periodic and
        antiperiodic, simple for Neumann and Dirichlet.
        """
        bc = BC.parse(bc)
        if isinstance(form, cls):
            result = form
        elif form is None or form == "":
            kind = "canonical" if bc.is_complex else "simple"
            result = cls(f"{kind}_{bc.value}")
        else:
            key = str(form).strip().lower()
            if key in ("canonical", "simple"):
                key = f"{key}_{bc.value}"
            try:
                result = cls(key)
            except ValueError:
                raise DomainError(f"unknown operator form {form!r}") from None
        if result.bc is not bc:
            raise DomainError(f"operator form {result.value} does not belong to {bc}")
        return result


# abstract convolution

def abstract_convolve(c_coeffs, u_coeffs):
    """C *_BC u as the componentwise product of coefficient sequences."""
    if c_coeffs.bc is not u_coeffs.bc or c_coeffs.M != u_coeffs.M:
        raise DomainError("abstract convolution needs matching bc and truncation")
    return u_coeffs.with_coefficients(c_coeffs.coefficients * u_coeffs.coefficients)


# regulating functions

def _simple_symbol(C, k, M_needed=None):
    """Convolution symbol of the simple N/D forms for N/D mode indices k."""
    k = np.asarray(k)
    m = int(np.max(k)) // 2 + 1 if len(k) else 0
    cp = project(BC.PERIODIC, C, m)
    ca = project(BC.ANTIPERIODIC, C, m)
    out = np.empty(len(k))
    for i, kk in enumerate(k):
        if kk % 2 == 0:
            out[i] = cp.coefficient(kk // 2).real
        else:
            out[i] = ca.coefficient((kk - 1) // 2).real
    return out


@dataclass(frozen=True, eq=False)
class RegulatingFunction:
    """phi_k = c_id - s * conv_k on the modes of a truncation.

    ``conv`` is the convolution symbol, ``scale`` the factor s (sqrt2 for the
    simple forms), ``c`` the constant of the form and ``c_id`` the identity
    multiple that phi_k tends to.
    """

    bc: BoundaryCondition
    M: int
    c: float
    c_id: float
    scale: float
    conv: np.ndarray

    @property
    def indices(self):
        return mode_indices(self.bc, self.M)

    @property
    def eigenvalues(self):
        return eigenvalues(self.bc, self.indices)

    @cached_property
    def values(self):
        return self.c_id - self.scale * self.conv

    def __call__(self, k):
        pos = np.nonzero(self.indices == k)[0]
        if len(pos) == 0:
            raise DomainError(f"mode {k} outside truncation M={self.M}")
        return float(self.values[pos[0]])

    def tail_estimate(self, count=8):
        """Numerical estimate of lim phi_k from the top ``count`` modes."""
        return float(np.mean(self.values[-count:]))


def regulating_function(C, bc, form=None, M=DEFAULT_M):
    bc = BC.parse(bc)
    form = OperatorForm.resolve(bc, form)
    c = silling_constant(C, bc, form)
    if form.is_simple:
        if not C.is_even:
            raise DomainError("simple N/D forms need an even kernel")
        conv = _simple_symbol(C, mode_indices(bc, M))
        c_id = SQRT2 * c
    else:
        if form in (OperatorForm.CANONICAL_NEUMANN, OperatorForm.CANONICAL_DIRICHLET) and not C.is_even:
            raise DomainError(f"{form.value} needs an even kernel")
        coeffs = project(bc, C, M).coefficients
        if np.max(np.abs(np.imag(coeffs)), initial=0.0) > 1e-10:
            raise DomainError("kernel coefficients are not real; the operator is not self-adjoint")
        conv = np.real(coeffs)
        c_id = c
    return RegulatingFunction(bc, M, float(c), float(c_id), form.conv_scale, conv)


@dataclass(frozen=True, eq=False)
class NonlocalOperator:
    """phi(A_BC) for one operator form, truncated at M modes."""

    kernel: object
    bc: BoundaryCondition
    form: OperatorForm
    regulating: RegulatingFunction

    @property
    def M(self):
        return self.regulating.M

    @property
    def phi(self):
        return self.regulating.values

    @property
    def c_id(self):
        return self.regulating.c_id

    def _check(self, coeffs):
        if coeffs.bc is not self.bc or coeffs.M != self.M:
            raise DomainError("coefficient vector does not match the operator truncation")

    def apply(self, coeffs):
        self._check(coeffs)
        return coeffs.with_coefficients(self.phi * coeffs.coefficients)

    def convolve(self, coeffs):
        """Convolution part (without the scale factor) in coefficient space."""
        self._check(coeffs)
        return coeffs.with_coefficients(self.regulating.conv * coeffs.coefficients)

    def apply_function(self, g, coeffs):
        """g(phi(A)) u = sum g(phi_k) u_k e_k."""
        self._check(coeffs)
        return coeffs.with_coefficients(g(self.phi) * coeffs.coefficients)

    def project(self, u, quad=None):
        return project(self.bc, u, self.M, quad)

    def is_positive(self, tol=1e-12):
        return bool(np.min(self.phi) >= -tol)


def build_operator(C, bc, form=None, M=DEFAULT_M):
    bc = BC.parse(bc)
    form = OperatorForm.resolve(bc, form)
    return NonlocalOperator(C, bc, form, regulating_function(C, bc, form, M))


# integral representations

_CONV_QUAD = QuadratureRule(order=16, max_width=0.125)


def _extended_integral(kernel, u, x, sign=1.0, quad=_CONV_QUAD):
    """int_{-1}^{1} kernel(sign*x - y) u(y) dy for each x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    kb = kernel.breakpoints
    ub = breakpoints_of(u)
    out = np.empty(len(x), dtype=complex)
    for i, xi in enumerate(x):
        s = sign * xi
        bps = tuple(s - b for b in kb) + ub
        yy, w = quad.nodes(-1.0, 1.0, bps)
        out[i] = np.sum(w * kernel(s - yy) * np.asarray(u(yy)))
    return out


def _real_if_close(vals):
    vals = np.asarray(vals)
    if np.iscomplexobj(vals) and np.max(np.abs(vals.imag), initial=0.0) <= 1e-12 * max(1.0, np.max(np.abs(vals), initial=0.0)):
        return vals.real
    return vals


def integral_convolve(C, u, bc, form=None, x=0.0, M=DEFAULT_M, quad=_CONV_QUAD):
    """Convolution part of the operator evaluated from its integral form.

    For the simple forms this is C*_p P_even u + C*_a P_odd u (Neumann) or
    the swapped pairing (Dirichlet), without the sqrt2 factor.  The canonical
    Dirichlet form is evaluated in coefficient space with ``M`` modes.
    """
    bc = BC.parse(bc)
    form = OperatorForm.resolve(bc, form)
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if form is OperatorForm.CANONICAL_PERIODIC:
        vals = INV_SQRT2 * _extended_integral(extend(C, Extension.PERIODIC2), u, x, quad=quad)
    elif form is OperatorForm.CANONICAL_ANTIPERIODIC:
        vals = INV_SQRT2 * _extended_integral(extend(C, Extension.ANTIPERIODIC2), u, x, quad=quad)
    elif form.is_simple:
        if not C.is_even:
            raise DomainError("simple forms need an even kernel")
        ev, od = parity_project(u, "even"), parity_project(u, "odd")
        if form is OperatorForm.SIMPLE_DIRICHLET:
            ev, od = od, ev
        vals = INV_SQRT2 * (
            _extended_integral(extend(C, Extension.PERIODIC2), ev, x, quad=quad)
            + _extended_integral(extend(C, Extension.ANTIPERIODIC2), od, x, quad=quad)
        )
    elif form is OperatorForm.CANONICAL_NEUMANN:
        if not C.is_even:
            raise DomainError("canonical Neumann form needs an even kernel")
        split = half_wave_split(C)
        c1 = extend(split.c1, Extension.PERIODIC2)
        c2 = extend(split.c2, Extension.PERIODIC2)
        vals = 0.5 * (
            _extended_integral(c1, u, x, quad=quad)
            + _extended_integral(c1, u, x, sign=-1.0, quad=quad)
            - _extended_integral(c2, u, x, quad=quad)
            - _extended_integral(c2, u, x, sign=-1.0, quad=quad)
        )
        e0 = INV_SQRT2 * quad.integrate(u, -1.0, 1.0)
        vals = vals + split.k_NC * e0
    else:
        if not C.is_even:
            raise DomainError("canonical Dirichlet form needs an even kernel")
        cc = project(bc, C, M)
        uc = project(bc, u, M)
        vals = synthesize(abstract_convolve(cc, uc), x)
    vals = _real_if_close(vals)
    return vals[0] if scalar else vals


def integral_apply(C, u, bc, form=None, x=0.0, M=DEFAULT_M, quad=_CONV_QUAD):
    """phi(A_BC) u evaluated through the integral representation."""
    bc = BC.parse(bc)
    form = OperatorForm.resolve(bc, form)
    c = silling_constant(C, bc, form)
    c_id = SQRT2 * c if form.is_simple else c
    conv = integral_convolve(C, u, bc, form, x, M, quad)
    return c_id * np.asarray(u(np.asarray(x, dtype=float))) - form.conv_scale * conv


def dirichlet_projection_convolve(C, u, x, n, quad=_CONV_QUAD):
    """Canonical Dirichlet convolution from its projection-P integral form.

    P projects onto span{e_{4l+1}}; here it is truncated to l <= n, so the
    result converges to the coefficient-space value as n grows.  Used for
    validation only.
    """
    if not C.is_even:
        raise DomainError("the projection form needs an even kernel")
    ks = 4 * np.arange(n + 1) + 1
    pc = project(BC.DIRICHLET, C, int(ks[-1])).coefficients[ks - 1]
    om = 0.5 * np.pi * ks

    # e_{4l+1}(y) = cos((4l+1) pi y / 2), whose natural continuation is 2-antiperiodic
    def pc_hat(y):
        y = np.asarray(y, dtype=float)
        return np.cos(np.multiply.outer(y, om)) @ pc

    class _Ext:
        breakpoints = ()

        def __call__(self, y):
            return pc_hat(y)

    class _Rest:
        breakpoints = extend(C, Extension.ANTIPERIODIC2).breakpoints

        def __call__(self, y):
            return extend(C, Extension.ANTIPERIODIC2)(y) - pc_hat(y)

    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    quad = quad.refined_for(om[-1])
    p, r = _Ext(), _Rest()
    vals = 0.5 * (
        _extended_integral(p, u, x, quad=quad)
        + _extended_integral(p, u, x, sign=-1.0, quad=quad)
        - _extended_integral(r, u, x, quad=quad)
        - _extended_integral(r, u, x, sign=-1.0, quad=quad)
    )
    vals = _real_if_close(vals)
    return vals[0] if scalar else vals


# solutions

def sinc_form(t, phi):
    """sin(t sqrt(phi)) / sqrt(phi), continued by t at phi = 0."""
    phi = np.asarray(phi, dtype=float)
    return t * np.sinc(t * np.sqrt(np.maximum(phi, 0.0)) / np.pi)


def cos_form(t, phi):
    return np.cos(t * np.sqrt(np.maximum(np.asarray(phi, dtype=float), 0.0)))


def _as_coeffs(op, u):
    if u is None:
        return op.project(lambda x: np.zeros_like(x))
    if isinstance(u, CoefficientVector):
        op._check(u)
        return u
    return op.project(u)


@dataclass(frozen=True, eq=False)
class SpectralSolution:
    """u(t) = cos(t sqrt(phi)) u0 + sin(t sqrt(phi))/sqrt(phi) v0, modewise."""

    operator: NonlocalOperator
    u0: CoefficientVector
    v0: CoefficientVector

    @property
    def bc(self):
        return self.operator.bc

    @property
    def M(self):
        return self.operator.M

    def coefficients(self, t):
        phi = self.operator.phi
        return self.u0.with_coefficients(
            cos_form(t, phi) * self.u0.coefficients + sinc_form(t, phi) * self.v0.coefficients
        )

    def velocity(self, t):
        phi = self.operator.phi
        return self.u0.with_coefficients(
            -phi * sinc_form(t, phi) * self.u0.coefficients + cos_form(t, phi) * self.v0.coefficients
        )

    def __call__(self, x, t, derivative=0):
        return synthesize(self.coefficients(t), x, derivative=derivative)

    def energy(self, t):
        u = self.coefficients(t).coefficients
        v = self.velocity(t).coefficients
        return 0.5 * float(np.sum(np.abs(v) ** 2 + self.operator.phi * np.abs(u) ** 2))


def solve_homogeneous(op, u0, v0=None, tol=1e-12):
    if np.min(op.phi) < -tol:
        raise DomainError(f"operator is not positive: min phi = {np.min(op.phi):.3g}")
    return SpectralSolution(op, _as_coeffs(op, u0), _as_coeffs(op, v0))


def solve_inhomogeneous(op, b, t, epsabs=1e-13, epsrel=1e-10):
    """Duhamel term v(t) = sum_k int_0^t S(t - tau, phi_k) b_k(tau) dtau e_k.

    ``b`` maps tau to a coefficient array (or CoefficientVector) in the
    operator's storage order.
    """
    phi = op.phi
    n = len(phi)
    if t == 0:
        return CoefficientVector(op.bc, op.M, np.zeros(n))

    def integrand(tau):
        bk = b(tau)
        bk = bk.coefficients if isinstance(bk, CoefficientVector) else np.asarray(bk)
        val = sinc_form(t - tau, phi) * bk
        return np.concatenate([np.real(val), np.imag(val)])

    res, _ = quad_vec(integrand, 0.0, t, epsabs=epsabs, epsrel=epsrel)
    vals = res[:n] + 1j * res[n:]
    if not op.bc.is_complex:
        vals = vals.real
    return CoefficientVector(op.bc, op.M, vals)


# decay estimate

def decay_bound_check(c, lam, t):
    """Bounds on |cos(t sqrt(c - lam)) - cos(t sqrt c)| and the sinc analogue.

    Returns (bound_cos, bound_sinc, actual_cos, actual_sinc).
    """
    if not c > 0:
        raise DomainError(f"decay estimate needs c > 0, got {c}")
    if lam > min(c, 1.0):
        raise DomainError(f"decay estimate needs lambda <= min(c, 1), got {lam}")
    a = abs(lam)
    bound_cos = (t * t / (2 * c) + abs(t) / np.sqrt(c)) * a
    bound_sinc = (t * t / (6 * c) + abs(t) / (2 * np.sqrt(c))) * a
    actual_cos = abs(cos_form(t, c - lam) - cos_form(t, c))
    actual_sinc = abs(sinc_form(t, c - lam) - sinc_form(t, c))
    return float(bound_cos), float(bound_sinc), float(actual_cos), float(actual_sinc)


# jumps

def jump_scale(op, u0, x_jump, t, offsets=(1, 2, 4)):
    """Ratio of the solution jump at ``x_jump`` to the initial jump (v0 = 0).

    N(d) = u_M(x+d, t) - u_M(x-d, t) and D(d), the same for the truncated
    series of u0, are fitted as N = r D + s d over d in {h, 2h, 4h},
    h = 1/M.  Gibbs ringing is common to N and D, and s d absorbs the
    continuous remainder.
    """
    jumps = getattr(u0, "breakpoints", ())
    if not any(abs(b - x_jump) < 1e-12 for b in jumps):
        raise DomainError(f"initial data declares no jump at x = {x_jump}")
    coeffs0 = _as_coeffs(op, u0)
    coeffs_t = coeffs0.with_coefficients(cos_form(t, op.phi) * coeffs0.coefficients)
    h = 1.0 / op.M
    d = h * np.asarray(offsets, dtype=float)
    pts = np.concatenate([x_jump + d, x_jump - d])
    ut = synthesize(coeffs_t, pts, real=True)
    u0v = synthesize(coeffs0, pts, real=True)
    k = len(d)
    N = ut[:k] - ut[k:]
    D = u0v[:k] - u0v[k:]
    design = np.column_stack([D, d])
    (r, _), *_ = np.linalg.lstsq(design, N, rcond=None)
    return float(r)
