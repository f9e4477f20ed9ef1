import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from nlwave.basis import (
    BoundaryCondition as BC,
    CoefficientVector,
    eigenfunctions,
    eigenpair,
    eigenvalues,
    mode_indices,
    operator_scale,
    project,
    synthesize,
    zeros,
)
from nlwave.errors import DomainError
from nlwave.micromodulus import unit_box

ALL_BC = list(BC)


def test_parse_aliases():
    assert BC.parse("p") is BC.PERIODIC
    assert BC.parse("A") is BC.ANTIPERIODIC
    assert BC.parse(" Neumann ") is BC.NEUMANN
    assert BC.parse(BC.DIRICHLET) is BC.DIRICHLET
    with pytest.raises(DomainError):
        BC.parse("robin")


def test_storage_layouts():
    assert list(mode_indices("periodic", 2)) == [0, 1, -1, 2, -2]
    assert list(mode_indices("antiperiodic", 2)) == [0, -1, 1, -2, 2, -3]
    assert list(mode_indices("neumann", 3)) == [0, 1, 2, 3]
    assert list(mode_indices("dirichlet", 3)) == [1, 2, 3]
    with pytest.raises(DomainError):
        mode_indices("dirichlet", 0)


def test_antiperiodic_pairs_share_eigenvalue():
    lam = eigenvalues("antiperiodic", mode_indices("antiperiodic", 5))
    assert np.allclose(lam[0::2], lam[1::2])


@pytest.mark.parametrize("bc", ALL_BC)
@pytest.mark.parametrize("k", [0, 1, 3])
def test_unit_norm_against_adaptive_quadrature(bc, k):
    if bc is BC.DIRICHLET and k == 0:
        k = 2
    ep = eigenpair(bc, k)
    val, _ = quad(lambda x: abs(ep(x)) ** 2, -1, 1, limit=200)
    assert abs(val - 1.0) < 1e-12


@pytest.mark.parametrize("bc", ALL_BC)
def test_pairwise_orthogonality_against_adaptive_quadrature(bc):
    i, j = mode_indices(bc, 3)[1:3]
    a, b = eigenpair(bc, i), eigenpair(bc, j)
    re, _ = quad(lambda x: np.real(np.conj(a(x)) * b(x)), -1, 1, limit=200)
    im, _ = quad(lambda x: np.imag(np.conj(a(x)) * b(x)), -1, 1, limit=200)
    assert abs(re) < 1e-12 and abs(im) < 1e-12


@pytest.mark.parametrize("bc", ALL_BC)
def test_eigen_relation_by_finite_differences(bc):
    x = np.linspace(-0.9, 0.9, 7)
    h = 1e-4
    for k in mode_indices(bc, 3):
        e = eigenpair(bc, k)
        d2 = (e(x + h) - 2 * e(x) + e(x - h)) / h**2
        assert np.allclose(-operator_scale(bc) * d2, e.eigenvalue * e(x), atol=1e-5)


def test_boundary_behaviour():
    for k in range(1, 6):
        d = eigenpair("dirichlet", k)
        assert abs(d(-1.0)) < 1e-14 and abs(d(1.0)) < 1e-12
        n = eigenpair("neumann", k)
        assert abs(n.derivative(-1.0)) < 1e-12 and abs(n.derivative(1.0)) < 1e-10
    p, a = eigenpair("periodic", 3), eigenpair("antiperiodic", -2)
    assert abs(p(-1.0) - p(1.0)) < 1e-14
    assert abs(a(-1.0) + a(1.0)) < 1e-14


def test_invalid_index():
    with pytest.raises(DomainError):
        eigenpair("neumann", -1)
    with pytest.raises(DomainError):
        eigenpair("dirichlet", 0)
    with pytest.raises(DomainError):
        eigenpair("periodic", 1.5)


def test_box_coefficients_match_closed_forms():
    C = unit_box()
    assert np.isclose(project("periodic", C, 4).coefficient(0), 1 / np.sqrt(2), atol=1e-13)
    # e_2 = cos(pi (x + 1)) = -cos(pi x), so <e_2|box> = -int_{-1/2}^{1/2} cos(pi x) = -2/pi
    assert np.isclose(project("neumann", C, 4).coefficient(2), -2 / np.pi, atol=1e-13)
    for k in (1, 2, 3, 5):
        expect = np.sqrt(2) * np.sin(np.pi * k / 2) / (np.pi * k)
        assert np.isclose(project("periodic", C, 6).coefficient(k), expect, atol=1e-13)


@pytest.mark.parametrize("bc", ALL_BC)
def test_project_synthesize_round_trip(bc):
    M = 6
    idx = mode_indices(bc, M)
    coeffs = np.zeros(len(idx), dtype=complex if bc.is_complex else float)
    coeffs[1] = 0.7
    coeffs[3] = -0.2
    cv = CoefficientVector(bc, M, coeffs)
    u = lambda x: synthesize(cv, x, real=False)  # noqa: E731
    back = project(bc, u, M)
    assert np.max(np.abs(back.coefficients - coeffs)) < 1e-12


@pytest.mark.parametrize("bc", [BC.PERIODIC, BC.ANTIPERIODIC])
def test_real_function_has_conjugate_symmetric_coefficients(bc):
    f = lambda x: np.exp(x) * (x < 0.3)  # noqa: E731
    f.breakpoints = (0.3,)
    c = project(bc, f, 32)
    assert c.conjugate_symmetry_defect() < 1e-14
    vals = synthesize(c, np.linspace(-1, 1, 9))
    assert not np.iscomplexobj(vals)


def test_coefficient_vector_validation_and_arithmetic():
    z = zeros("neumann", 3)
    assert z.norm() == 0
    with pytest.raises(DomainError):
        CoefficientVector("neumann", 3, np.zeros(3))
    with pytest.raises(DomainError):
        z + zeros("dirichlet", 3)
    with pytest.raises(DomainError):
        z.coefficient(7)


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(ALL_BC),
    st.lists(st.floats(-5, 5), min_size=4, max_size=4),
    st.lists(st.floats(-5, 5), min_size=4, max_size=4),
    st.floats(-3, 3),
)
def test_coefficient_vector_is_linear(bc, a, b, s):
    M = 3
    n = len(mode_indices(bc, M))
    va = CoefficientVector(bc, M, np.resize(a, n))
    vb = CoefficientVector(bc, M, np.resize(b, n))
    lhs = (va + vb * s).coefficients
    assert np.allclose(lhs, np.resize(a, n) + s * np.resize(b, n))
    x = np.linspace(-1, 1, 5)
    assert np.allclose(synthesize(va + vb, x, real=False), synthesize(va, x, real=False) + synthesize(vb, x, real=False))


def test_eigenfunction_shape():
    E = eigenfunctions("dirichlet", [1, 2, 3], np.linspace(-1, 1, 11))
    assert E.shape == (3, 11)
