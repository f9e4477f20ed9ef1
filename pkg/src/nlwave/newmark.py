"""Explicit Newmark (central difference) integration of M u'' + A u = b(t).

    M u_1     = (M - k^2/2 A) u_0 + k M v_0 + k^2/2 b_0
    M u_{n+1} = (2M - k^2 A) u_n - M u_{n-1} + k^2 b_n
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import StabilityError

log = logging.getLogger(__name__)


def _matrix(op):
    return op.matrix if hasattr(op, "matrix") else np.asarray(op, dtype=float)


class MassSolver:
    """Applies M^{-1}; diagonal masses are inverted entrywise."""

    def __init__(self, M):
        M = np.atleast_2d(_matrix(M))
        off = M - np.diag(np.diag(M))
        self.diagonal = not np.any(off)
        if self.diagonal:
            d = np.diag(M)
            if np.any(d <= 0):
                raise StabilityError("mass matrix is singular or indefinite")
            self.inv = 1.0 / d
        else:
            self.lu = np.linalg.cholesky(M)

    def __call__(self, r):
        if self.diagonal:
            return self.inv * r
        z = np.linalg.solve(self.lu, r)
        return np.linalg.solve(self.lu.T, z)


@dataclass(frozen=True)
class TimeGrid:
    k: float
    T: float

    def __post_init__(self):
        if self.k <= 0 or self.T < 0:
            raise ValueError("time step must be positive and final time nonnegative")
        n = round(self.T / self.k)
        if abs(n * self.k - self.T) > 1e-12 * max(1.0, self.T):
            raise ValueError(f"final time {self.T} is not a multiple of the step {self.k}")

    @classmethod
    def from_steps(cls, T, steps):
        return cls(T / steps, T)

    @property
    def steps(self):
        return int(round(self.T / self.k))

    def time(self, n):
        return n * self.k


def first_step(M, A, u0, v0, b0, k, solver=None):
    solver = solver or MassSolver(M)
    A = _matrix(A)
    return u0 + k * v0 + 0.5 * k * k * solver(b0 - A @ u0)


def step(M, A, u_n, u_prev, b_n, k, solver=None):
    solver = solver or MassSolver(M)
    A = _matrix(A)
    return 2.0 * u_n - u_prev + k * k * solver(b_n - A @ u_n)


def spectral_radius(M, A, iterations=50, seed=0):
    """Power-iteration estimate of rho(M^{-1} A)."""
    solver = MassSolver(M)
    A = _matrix(A)
    x = np.random.default_rng(seed).standard_normal(A.shape[0])
    rho = 0.0
    for _ in range(iterations):
        y = solver(A @ x)
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return 0.0
        rho = nrm / np.linalg.norm(x)
        x = y / nrm
    return float(rho)


def check_stability(M, A, k, h_min=None, override=False):
    """Enforce k <= h_min/10 unless overridden, and warn when k^2 rho >= 4."""
    if h_min is not None and k > h_min / 10 and not override:
        raise StabilityError(
            f"time step {k} exceeds h_min/10 = {h_min / 10:.6g}; pass override=True to run anyway"
        )
    rho = spectral_radius(M, A)
    if k * k * rho >= 4.0:
        warnings.warn(f"k^2 rho(M^-1 A) = {k * k * rho:.3g} >= 4; the explicit scheme is unstable", RuntimeWarning)
    return rho


@dataclass
class Trajectory:
    times: np.ndarray
    frames: np.ndarray  # shape (n_frames, dim)
    energy: np.ndarray

    @property
    def final(self):
        return self.frames[-1]


def discrete_energy(M, A, u_next, u_n, k):
    """1/2 |(u_{n+1} - u_n)/k|_M^2 + 1/2 u_{n+1}^T A u_n, conserved when b = 0."""
    M = _matrix(M)
    A = _matrix(A)
    v = (u_next - u_n) / k
    return 0.5 * float(v @ (M @ v)) + 0.5 * float(u_next @ (A @ u_n))


def evolve(M, A, u0, v0, b, grid, h_min=None, override=False, frames=200, check=True):
    """March to grid.T and keep about ``frames`` equally spaced snapshots.

    ``b`` is None (homogeneous) or a callable t -> load vector.
    """
    A_mat = _matrix(A)
    M_mat = _matrix(M)
    if check:
        check_stability(M_mat, A_mat, grid.k, h_min, override)
    solver = MassSolver(M_mat)
    n_steps = grid.steps
    stride = max(1, n_steps // max(frames, 1))
    zero = np.zeros_like(u0, dtype=float)
    src = (lambda t: zero) if b is None else b

    u0 = np.asarray(u0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    times, snaps, energy = [0.0], [u0.copy()], []
    if n_steps == 0:
        return Trajectory(np.array(times), np.array(snaps), np.array([]))
    u_prev = u0
    u = first_step(M_mat, A_mat, u0, v0, src(0.0), grid.k, solver)
    for n in range(1, n_steps + 1):
        if n % stride == 0 or n == n_steps:
            if not np.all(np.isfinite(u)):
                raise StabilityError(f"non-finite values at step {n} (t = {grid.time(n):.4g})")
            times.append(grid.time(n))
            snaps.append(u.copy())
        if n == n_steps:
            break
        u_next = step(M_mat, A_mat, u, u_prev, src(grid.time(n)), grid.k, solver)
        if b is None and (n % stride == 0):
            energy.append(discrete_energy(M_mat, A_mat, u_next, u, grid.k))
        u_prev, u = u, u_next
    log.debug("evolved %d steps, %d frames", n_steps, len(times))
    return Trajectory(np.array(times), np.array(snaps), np.array(energy))


def reverse(M, A, u_last, u_before, steps, k, b=None, t_end=None):
    """Run the recurrence backwards from (u_N, u_{N-1}); returns u_0."""
    solver = MassSolver(M)
    A = _matrix(A)
    u_next, u = u_last, u_before
    for n in range(steps - 1, 0, -1):
        src = 0.0 if b is None else b(n * k)
        u_prev = 2.0 * u - u_next + k * k * solver(src - A @ u)
        u_next, u = u, u_prev
    return u
