import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from nlwave.basis import BoundaryCondition as BC, CoefficientVector, eigenpair, mode_indices, synthesize
from nlwave.errors import DomainError
from nlwave.harness import initial_data
from nlwave.micromodulus import constant, half_wave_split, extend, truncated_gaussian, unit_box, zero
from nlwave.spectral import (
    OperatorForm,
    abstract_convolve,
    build_operator,
    cos_form,
    decay_bound_check,
    dirichlet_projection_convolve,
    integral_apply,
    integral_convolve,
    jump_scale,
    regulating_function,
    sinc_form,
    solve_homogeneous,
    solve_inhomogeneous,
)

ALL_FORMS = [(bc, f) for bc in BC for f in ((None,) if bc.is_complex else ("canonical", "simple"))]


def test_form_resolution():
    assert OperatorForm.resolve("p") is OperatorForm.CANONICAL_PERIODIC
    assert OperatorForm.resolve("n") is OperatorForm.SIMPLE_NEUMANN
    assert OperatorForm.resolve("d", "canonical") is OperatorForm.CANONICAL_DIRICHLET
    with pytest.raises(DomainError):
        OperatorForm.resolve("p", "simple")
    with pytest.raises(DomainError):
        OperatorForm.resolve("n", "canonical_dirichlet")


def test_periodic_regulating_function_closed_form():
    # <e_k|box> = sqrt2 sin(pi k/2) / (pi k), c = 1/sqrt2
    reg = regulating_function(unit_box(), "periodic", M=16)
    for k in range(1, 17):
        expect = 1 / np.sqrt(2) - np.sqrt(2) * np.sin(np.pi * k / 2) / (np.pi * k)
        assert np.isclose(reg(k), expect, atol=1e-13) and np.isclose(reg(-k), expect, atol=1e-13)
    assert abs(reg(0)) < 1e-14


def test_neumann_regulating_functions_closed_form():
    k = np.arange(1, 17)
    canon = regulating_function(unit_box(), "neumann", "canonical", M=16)
    simple = regulating_function(unit_box(), "neumann", "simple", M=16)
    c_coef = 2 / (np.pi * k) * (np.sin(3 * np.pi * k / 4) - np.sin(np.pi * k / 4))
    assert np.allclose(canon.values[1:], 1 - c_coef, atol=1e-13)
    assert np.allclose(simple.values[1:], 1 - 4 / (np.pi * k) * np.sin(np.pi * k / 4), atol=1e-13)
    assert np.isclose(canon.c_id, 1.0) and np.isclose(simple.c_id, 1.0)


@pytest.mark.parametrize("bc,form", ALL_FORMS)
def test_phi_tends_to_identity_constant(bc, form):
    reg = regulating_function(unit_box(), bc, form, M=512)
    assert abs(reg.tail_estimate() - reg.c_id) < 5e-3


@pytest.mark.parametrize("bc,form", ALL_FORMS)
def test_positivity(bc, form):
    assert build_operator(unit_box(), bc, form, 128).is_positive()


def test_negative_kernel_rejected_by_solver():
    op = build_operator(constant(-1.0), "periodic", M=8)
    assert not op.is_positive()
    with pytest.raises(DomainError):
        solve_homogeneous(op, lambda x: np.cos(np.pi * x))


def test_abstract_convolution_is_componentwise():
    a = CoefficientVector("neumann", 3, [1.0, 2.0, 3.0, 4.0])
    b = CoefficientVector("neumann", 3, [0.5, 0.5, 2.0, -1.0])
    assert np.allclose(abstract_convolve(a, b).coefficients, [0.5, 1.0, 6.0, -4.0])
    with pytest.raises(DomainError):
        abstract_convolve(a, CoefficientVector("neumann", 2, [1.0, 1.0, 1.0]))


@pytest.mark.parametrize("bc,ext", [("periodic", "periodic2"), ("antiperiodic", "antiperiodic2")])
def test_coefficient_convolution_matches_adaptive_quadrature(bc, ext):
    C = truncated_gaussian(0.3, 0.9)
    Cx = extend(C, ext)
    u = lambda y: np.exp(np.sin(np.pi * y)) if bc == "periodic" else y * (1 - y**2)  # noqa: E731
    op = build_operator(C, bc, M=64)
    conv = synthesize(op.convolve(op.project(u)), np.array([-0.7, 0.1, 0.55]))
    for x, val in zip([-0.7, 0.1, 0.55], conv):
        ref, _ = quad(lambda y: Cx(x - y) * u(y), -1, 1, points=[x - 0.9, x + 0.9], limit=200)
        assert abs(val - ref / np.sqrt(2)) < 1e-8


@pytest.mark.parametrize("bc,form", ALL_FORMS)
def test_integral_form_acts_diagonally_on_eigenfunctions(bc, form):
    op = build_operator(unit_box(), bc, form, 64)
    x = np.linspace(-0.9, 0.9, 7)
    for k in mode_indices(bc, 3)[:4]:
        e = eigenpair(bc, k)
        lhs = integral_apply(unit_box(), e, bc, form, x, M=64)
        assert np.max(np.abs(lhs - op.regulating(k) * e(x))) < 1e-8


def test_canonical_neumann_kernel_constant_matters():
    # dropping k_NC breaks the match on the constant mode
    u = lambda y: np.full(np.shape(y), 1.0)  # noqa: E731
    op = build_operator(unit_box(), "neumann", "canonical", 16)
    full = integral_convolve(unit_box(), u, "neumann", "canonical", 0.3)
    # u = sqrt2 e_0 and e_0 = 1/sqrt2, so the coefficient-space value is conv_0
    coef = op.regulating.conv[0]
    assert abs(full - coef) < 1e-12
    k_nc = half_wave_split(unit_box()).k_NC
    assert abs((full - k_nc * np.sqrt(2)) - coef) > 0.2


def test_dirichlet_projection_form_converges():
    u = lambda y: (1 - y**2) * np.exp(y)  # noqa: E731
    x = np.array([-0.6, 0.2, 0.8])
    ref = integral_convolve(unit_box(), u, "dirichlet", "canonical", x, M=512)
    errs = [np.max(np.abs(dirichlet_projection_convolve(unit_box(), u, x, n) - ref)) for n in (8, 32, 64)]
    assert errs[-1] < 1e-6 and errs[-1] < errs[0]


def test_simple_form_rejects_uneven_kernel():
    from nlwave.micromodulus import Micromodulus

    odd = Micromodulus(lambda x: x, (), False)
    with pytest.raises(DomainError):
        regulating_function(odd, "neumann", "simple", 8)


def test_solution_forms():
    assert np.isclose(sinc_form(2.0, 0.0), 2.0)
    assert np.isclose(sinc_form(2.0, 4.0), np.sin(4.0) / 2.0)
    assert np.isclose(cos_form(2.0, 4.0), np.cos(4.0))


@pytest.mark.parametrize("bc,form", ALL_FORMS)
def test_eigenmode_evolution(bc, form):
    op = build_operator(unit_box(), bc, form, 32)
    k = mode_indices(bc, 3)[2]
    e = eigenpair(bc, k)
    sol = solve_homogeneous(op, lambda x: np.real(e(x)) if not bc.is_complex else e(x))
    x = np.linspace(-1, 1, 9)
    for t in (0.5, 3.0):
        assert np.allclose(sol(x, t), np.cos(t * np.sqrt(op.regulating(k))) * e(x), atol=1e-10)


@pytest.mark.parametrize("bc,form", ALL_FORMS)
def test_energy_is_conserved(bc, form):
    op = build_operator(unit_box(), bc, form, 64)
    sol = solve_homogeneous(op, initial_data("bump"), initial_data("mode1", bc if bc is not BC.DIRICHLET else bc))
    assert abs(sol.energy(7.3) - sol.energy(0.0)) < 1e-12 * max(1.0, sol.energy(0.0))


def test_zero_kernel_gives_stationary_solution():
    op = build_operator(zero(), "dirichlet", "canonical", 16)
    sol = solve_homogeneous(op, initial_data("bump"))
    x = np.linspace(-1, 1, 11)
    assert np.allclose(sol(x, 5.0), sol(x, 0.0))


def test_duhamel_constant_source():
    op = build_operator(unit_box(), "neumann", "simple", 8)
    bk = np.linspace(1.0, 0.1, 9)
    t = 3.0
    res = solve_inhomogeneous(op, lambda tau: bk, t)
    phi = op.phi
    expect = np.where(phi > 0, bk * (1 - np.cos(t * np.sqrt(np.abs(phi)))) / np.where(phi > 0, phi, 1), bk * t * t / 2)
    assert np.allclose(res.coefficients, expect, atol=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 5.0), st.floats(-1.0, 1.0), st.floats(-20.0, 20.0))
def test_decay_estimate(c, frac, t):
    lam = frac * min(c, 1.0)
    bc_, bs, ac, as_ = decay_bound_check(c, lam, t)
    assert ac <= bc_ * (1 + 1e-12) + 1e-15
    assert as_ <= bs * (1 + 1e-12) + 1e-15


def test_decay_estimate_domain():
    with pytest.raises(DomainError):
        decay_bound_check(0.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        decay_bound_check(0.5, 0.9, 1.0)


def test_jump_scaling_periodic():
    op = build_operator(unit_box(), "periodic", M=256)
    u0 = initial_data("disc")
    for t in (0.5, 1.0, 2.0):
        assert abs(jump_scale(op, u0, 0.25, t) - np.cos(np.sqrt(op.c_id) * t)) < 1e-2
    with pytest.raises(DomainError):
        jump_scale(op, u0, 0.3, 1.0)
