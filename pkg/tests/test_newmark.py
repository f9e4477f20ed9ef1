import warnings

import numpy as np
import pytest

from nlwave import newmark
from nlwave.errors import StabilityError


def _oscillator_error(n, w=2.0, T=1.0):
    g = newmark.TimeGrid.from_steps(T, n)
    tr = newmark.evolve(np.eye(1), np.array([[w * w]]), np.ones(1), np.zeros(1), None, g, frames=1, check=False)
    return abs(tr.final[0] - np.cos(w * T))


def test_second_order_convergence():
    e = [_oscillator_error(n) for n in (100, 200, 400, 800)]
    for a, b in zip(e, e[1:]):
        assert abs(a / b - 4.0) < 0.4


def test_exact_for_quadratic_in_time():
    rng = np.random.default_rng(0)
    Q = rng.standard_normal((5, 5))
    M = Q @ Q.T + 5 * np.eye(5)
    A = rng.standard_normal((5, 5))
    A = A @ A.T
    X = rng.standard_normal(5)
    b = lambda t: 2 * M @ X + t * t * A @ X  # noqa: E731
    g = newmark.TimeGrid(0.01, 2.0)
    tr = newmark.evolve(M, A, np.zeros(5), np.zeros(5), b, g, frames=4, check=False)
    for t, u in zip(tr.times, tr.frames):
        assert np.allclose(u, t * t * X, atol=1e-10)


def test_time_reversal():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((6, 6))
    A = A @ A.T / 6
    M = np.eye(6)
    u0, v0 = rng.standard_normal(6), rng.standard_normal(6)
    g = newmark.TimeGrid.from_steps(5.0, 500)
    solver = newmark.MassSolver(M)
    u_prev, u = u0, newmark.first_step(M, A, u0, v0, np.zeros(6), g.k, solver)
    for _ in range(1, g.steps):
        u_prev, u = u, newmark.step(M, A, u, u_prev, np.zeros(6), g.k, solver)
    back = newmark.reverse(M, A, u, u_prev, g.steps, g.k)
    assert np.max(np.abs(back - u0)) < 1e-8


def test_discrete_energy_conserved():
    A = np.diag([1.0, 4.0, 9.0])
    g = newmark.TimeGrid.from_steps(10.0, 2000)
    tr = newmark.evolve(np.eye(3), A, np.ones(3), np.zeros(3), None, g, frames=50, check=False)
    assert np.ptp(tr.energy) < 1e-12 * np.max(np.abs(tr.energy))


def test_mass_solver_cholesky_matches_dense_solve():
    M = np.array([[2.0, 0.5], [0.5, 1.0]])
    r = np.array([1.0, -2.0])
    assert np.allclose(newmark.MassSolver(M)(r), np.linalg.solve(M, r))
    with pytest.raises(StabilityError):
        newmark.MassSolver(np.diag([1.0, 0.0]))


def test_time_grid_validation():
    assert newmark.TimeGrid(0.005, 20.0).steps == 4000
    with pytest.raises(ValueError):
        newmark.TimeGrid(0.3, 1.0)
    with pytest.raises(ValueError):
        newmark.TimeGrid(0.0, 1.0)


def test_step_size_guard_and_override():
    M, A = np.eye(2), np.eye(2)
    with pytest.raises(StabilityError):
        newmark.check_stability(M, A, 0.1, h_min=0.5)
    rho = newmark.check_stability(M, A, 0.1, h_min=0.5, override=True)
    assert np.isclose(rho, 1.0)


def test_power_iteration_warning():
    A = np.diag([1.0, 100.0])
    with pytest.warns(RuntimeWarning):
        newmark.check_stability(np.eye(2), A, 0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        newmark.check_stability(np.eye(2), A, 0.1)


def test_spectral_radius_matches_eigenvalues():
    rng = np.random.default_rng(3)
    Q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    A = Q @ np.diag(np.linspace(1, 10, 8)) @ Q.T
    assert abs(newmark.spectral_radius(np.eye(8), A, iterations=300) - 10.0) < 1e-3


def test_blow_up_is_reported():
    g = newmark.TimeGrid.from_steps(2000.0, 1000)
    with pytest.raises(StabilityError):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            newmark.evolve(np.eye(1), np.array([[4.0]]), np.ones(1), np.zeros(1), None, g, override=True)


def test_zero_steps():
    tr = newmark.evolve(np.eye(1), np.eye(1), np.ones(1), np.zeros(1), None, newmark.TimeGrid(0.1, 0.0), check=False)
    assert len(tr.times) == 1 and tr.final[0] == 1.0
