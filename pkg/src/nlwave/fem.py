"""Discontinuous piecewise-polynomial Galerkin discretization on (-1, 1).

Degrees of freedom are ordered element by element: index K (l + 1) + j is
the coefficient of the j-th Legendre polynomial on element K.  The default
basis is L2-orthonormal, so the mass matrix is the identity.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import core
from .basis import SQRT2, INV_SQRT2, BoundaryCondition, eigenfunctions, mode_indices
from .errors import DomainError
from .micromodulus import Extension, extend, half_wave_split, silling_constant
from .quadrature import QuadratureRule, breakpoints_of, gauss_legendre
from .spectral import OperatorForm, regulating_function

BC = BoundaryCondition


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2:
            raise DomainError("a mesh needs at least two nodes")
        if np.any(np.diff(nodes) <= 0):
            raise DomainError("mesh nodes must be strictly increasing")
        if abs(nodes[0] + 1) > 1e-14 or abs(nodes[-1] - 1) > 1e-14:
            raise DomainError("mesh must span [-1, 1]")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, N):
        if N < 1:
            raise DomainError(f"need at least one element, got {N}")
        return cls(np.linspace(-1.0, 1.0, N + 1))

    @classmethod
    def level(cls, level):
        return cls.uniform(2**level)

    @property
    def N(self):
        return len(self.nodes) - 1

    @property
    def h(self):
        return np.diff(self.nodes)

    @property
    def h_min(self):
        return float(np.min(self.h))

    def is_symmetric(self, tol=1e-13):
        return bool(np.max(np.abs(self.nodes + self.nodes[::-1])) < tol)

    def is_aligned(self, points, tol=1e-12):
        return all(np.min(np.abs(self.nodes - p)) < tol for p in points)

    def locate(self, x):
        """Element index containing x; interior nodes belong to the right element."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.nodes, x, side="right") - 1
        return np.clip(idx, 0, self.N - 1)


@dataclass(frozen=True, eq=False)
class PolySpace:
    """V_h: polynomials of degree <= ``degree`` on each element."""

    mesh: Mesh
    degree: int
    normalized: bool = True

    def __post_init__(self):
        if self.degree < 0:
            raise DomainError("polynomial degree must be nonnegative")

    @property
    def n_local(self):
        return self.degree + 1

    @property
    def dim(self):
        return self.mesh.N * self.n_local

    def scale(self, K=None):
        """Per-element factors turning P_j into the stored basis, shape (N, l+1)."""
        h = self.mesh.h if K is None else self.mesh.h[[K]]
        j = np.arange(self.n_local)
        if not self.normalized:
            return np.ones((len(h), self.n_local))
        return np.sqrt((2 * j[None, :] + 1) / h[:, None])

    def local_basis(self, K, x, derivative=0):
        """phi_j^K(x) for j = 0..l, shape (l+1, len(x))."""
        a, b = self.mesh.nodes[K], self.mesh.nodes[K + 1]
        xi = (2.0 * np.asarray(x, dtype=float) - a - b) / (b - a)
        P = core.legendre_table(np.atleast_1d(xi), self.degree)
        if derivative:
            P = _legendre_derivative(P, np.atleast_1d(xi), self.degree, derivative) * (2.0 / (b - a)) ** derivative
        return P * self.scale(K)[0][:, None]

    def quad_order(self):
        return self.degree + 4


def _legendre_derivative(P, xi, degree, order):
    coeffs = np.eye(degree + 1)
    out = np.empty_like(P)
    for j in range(degree + 1):
        out[j] = np.polynomial.legendre.legval(xi, np.polynomial.legendre.legder(coeffs[j], order))
    return out


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Dense matrix with verified symmetry and positivity metadata."""

    matrix: np.ndarray
    name: str = "operator"
    info: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.matrix.shape[0]

    @cached_property
    def symmetric(self):
        return bool(np.max(np.abs(self.matrix - self.matrix.T), initial=0.0) < 1e-10)

    @cached_property
    def eigenvalues(self):
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.T))

    @cached_property
    def classification(self):
        ev = self.eigenvalues
        tol = 1e-8 * max(np.max(np.abs(ev)), 1e-300)
        if ev[0] > tol:
            return "PD"
        if ev[0] >= -tol:
            return "PSD"
        return "indefinite"

    @cached_property
    def is_diagonal(self):
        return bool(np.count_nonzero(self.matrix - np.diag(np.diag(self.matrix))) == 0)

    def __matmul__(self, other):
        return self.matrix @ other

    def solve(self, rhs):
        if self.is_diagonal:
            d = np.diag(self.matrix)
            return rhs / (d if np.ndim(rhs) == 1 else d[:, None])
        return np.linalg.solve(self.matrix, rhs)


# projections and evaluation

def _element_nodes(space, K, breakpoints=(), order=None, max_width=None):
    a, b = space.mesh.nodes[K], space.mesh.nodes[K + 1]
    q = order or max(space.degree + 4, 8)
    return QuadratureRule(q, max_width).nodes(a, b, breakpoints)


def load_vector(space, f, breakpoints=(), order=None):
    """(f, phi_i^K) for every basis function."""
    bps = tuple(breakpoints) + breakpoints_of(f)
    out = np.empty(space.dim)
    n = space.n_local
    for K in range(space.mesh.N):
        x, w = _element_nodes(space, K, bps, order)
        out[K * n:(K + 1) * n] = space.local_basis(K, x) @ (w * np.asarray(f(x), dtype=float))
    return out


def assemble_mass(space):
    n = space.n_local
    if space.normalized:
        diag = np.ones(space.dim)
    else:
        j = np.arange(n)
        diag = (space.mesh.h[:, None] / (2 * j[None, :] + 1)).ravel()
    return DenseOperator(np.diag(diag), "mass")


def l2_project(space, u, breakpoints=(), order=None):
    """Coefficients of the L2 projection of u onto V_h."""
    return assemble_mass(space).solve(load_vector(space, u, breakpoints, order))


def evaluate(space, coeffs, x, derivative=0):
    """u_h(x); at interior nodes the value from the right element is used."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    elems = space.mesh.locate(x)
    out = np.empty(len(x))
    n = space.n_local
    for K in np.unique(elems):
        sel = elems == K
        out[sel] = coeffs[K * n:(K + 1) * n] @ space.local_basis(K, x[sel], derivative)
    return out


def traces(space, coeffs):
    """Left and right traces u_h(x_K^+), u_h(x_{K+1}^-) of every element."""
    n = space.n_local
    U = np.asarray(coeffs).reshape(space.mesh.N, n)
    sc = space.scale()
    j = np.arange(n)
    left = np.sum(U * sc * (-1.0) ** j, axis=1)
    right = np.sum(U * sc, axis=1)
    return left, right


def interface_jumps(space, coeffs):
    """u_h(x_i^+) - u_h(x_i^-) at the interior nodes x_1..x_{N-1}."""
    left, right = traces(space, coeffs)
    return left[1:] - right[:-1]


def l2_norm(space, f, breakpoints=(), order=None):
    total = 0.0
    bps = tuple(breakpoints) + breakpoints_of(f)
    for K in range(space.mesh.N):
        x, w = _element_nodes(space, K, bps, order)
        total += np.sum(w * np.abs(np.asarray(f(x))) ** 2)
    return float(np.sqrt(total))


def l2_error(space, coeffs, exact, breakpoints=(), order=None):
    """||u_h - exact||_0 by elementwise quadrature."""
    n = space.n_local
    total = 0.0
    bps = tuple(breakpoints) + breakpoints_of(exact)
    for K in range(space.mesh.N):
        x, w = _element_nodes(space, K, bps, order or space.degree + 8)
        uh = coeffs[K * n:(K + 1) * n] @ space.local_basis(K, x)
        total += np.sum(w * (uh - np.asarray(exact(x))) ** 2)
    return float(np.sqrt(total))


def reflection(space):
    """Matrix R with (R u)(x) = u(-x); needs a symmetric mesh."""
    if not space.mesh.is_symmetric():
        raise DomainError("reflection needs a mesh symmetric about 0")
    N, n = space.mesh.N, space.n_local
    R = np.zeros((space.dim, space.dim))
    sign = (-1.0) ** np.arange(n)
    for K in range(N):
        M = N - 1 - K
        R[M * n + np.arange(n), K * n + np.arange(n)] = sign
    return R


def integral_vector(space):
    """m_i = int phi_i, so that int u_h = m . u."""
    m = np.zeros(space.dim)
    h = space.mesh.h
    sc = space.scale()
    m[0::space.n_local] = h * sc[:, 0]
    return m


# kernel integrals

def kernel_moment(space, T, j, x, kernel, split=True, order=None):
    """R_j^T(x) = int_T kernel(x - y) phi_j^T(y) dy, split where x - y hits a breakpoint."""
    c, d = space.mesh.nodes[T], space.mesh.nodes[T + 1]
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    bps = kernel.breakpoints if split else ()
    out = np.empty(len(xs))
    for i, xi in enumerate(xs):
        y, w = QuadratureRule(order or space.quad_order()).nodes(c, d, tuple(xi - p for p in bps))
        out[i] = np.sum(w * kernel(xi - y) * space.local_basis(T, y)[j])
    return out if np.ndim(x) else out[0]


def convolution_matrix(space, kernel, split=True, order=None):
    """B_{(K,i),(T,j)} = int_K int_T kernel(x - y) phi_i^K(x) phi_j^T(y) dy dx."""
    q = order or space.quad_order()
    xg, wg = gauss_legendre(q)
    xg = np.ascontiguousarray(xg)
    wg = np.ascontiguousarray(wg)
    nodes = np.ascontiguousarray(space.mesh.nodes)
    bps = np.ascontiguousarray(kernel.breakpoints if split else (), dtype=float)
    n = space.n_local
    B = np.empty((space.dim, space.dim))
    for K in range(space.mesh.N):
        x, y, w, T = core.row_nodes(K, nodes, bps, xg, wg)
        wk = w * kernel(x - y)
        B[K * n:(K + 1) * n] = core.row_accumulate(x, y, np.ascontiguousarray(wk), T, nodes, K, space.degree, space.normalized)
    return B


def mode_matrix(space, bc, M):
    """V_{k,i} = <e_k|phi_i> for the modes of a truncation (rows in storage order)."""
    bc = BC.parse(bc)
    idx = mode_indices(bc, M)
    n = space.n_local
    V = np.empty((len(idx), space.dim), dtype=complex if bc.is_complex else float)
    freq = np.pi * M
    for K in range(space.mesh.N):
        a, b = space.mesh.nodes[K], space.mesh.nodes[K + 1]
        x, w = QuadratureRule(space.degree + 8).refined_for(freq).nodes(a, b)
        E = eigenfunctions(bc, idx, x)
        V[:, K * n:(K + 1) * n] = np.conj(E) @ (w[:, None] * space.local_basis(K, x).T)
    return V


def assemble_stiffness(space, C, bc, form=None, split=True, order=None, dirichlet_modes=1024):
    """Weak form of phi(A_BC) on V_h for the chosen operator form."""
    bc = BC.parse(bc)
    form = OperatorForm.resolve(bc, form)
    Mass = assemble_mass(space).matrix
    c = silling_constant(C, bc, form)

    def conv(ext):
        return convolution_matrix(space, extend(C, ext), split, order)

    if form is OperatorForm.CANONICAL_PERIODIC:
        c_id = c
        Conv = INV_SQRT2 * conv(Extension.PERIODIC2)
    elif form is OperatorForm.CANONICAL_ANTIPERIODIC:
        c_id = c
        Conv = INV_SQRT2 * conv(Extension.ANTIPERIODIC2)
    elif form.is_simple:
        if not C.is_even:
            raise DomainError("simple forms need an even kernel")
        R = reflection(space)
        I = np.eye(space.dim)
        Pe, Po = 0.5 * (I + R), 0.5 * (I - R)
        if form is OperatorForm.SIMPLE_DIRICHLET:
            Pe, Po = Po, Pe
        c_id = SQRT2 * c
        # sqrt2 * (1/sqrt2) [B_p P_even + B_a P_odd]
        Conv = conv(Extension.PERIODIC2) @ Pe + conv(Extension.ANTIPERIODIC2) @ Po
    elif form is OperatorForm.CANONICAL_NEUMANN:
        if not C.is_even:
            raise DomainError("canonical Neumann form needs an even kernel")
        split_hw = half_wave_split(C)
        R = reflection(space)
        B1 = convolution_matrix(space, extend(split_hw.c1, Extension.PERIODIC2), split, order)
        B2 = convolution_matrix(space, extend(split_hw.c2, Extension.PERIODIC2), split, order)
        m = integral_vector(space)
        c_id = c
        Conv = 0.5 * (B1 - B2) @ (np.eye(space.dim) + R) + (split_hw.k_NC * INV_SQRT2) * np.outer(m, m)
    else:
        if not C.is_even:
            raise DomainError("canonical Dirichlet form needs an even kernel")
        reg = regulating_function(C, bc, form, dirichlet_modes)
        V = mode_matrix(space, bc, dirichlet_modes)
        c_id = c
        Conv = V.T @ (reg.conv[:, None] * V)
    A = c_id * Mass - Conv
    A = 0.5 * (A + A.T)
    return DenseOperator(A, "stiffness", {"bc": bc.value, "form": form.value, "c_id": c_id})
