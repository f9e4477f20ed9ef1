"""Quick numerical invariant suite behind the ``validate`` subcommand."""

import numpy as np

from . import fem, newmark
from .basis import BoundaryCondition, eigenfunctions, mode_indices, operator_scale
from .micromodulus import extend, half_wave_split, unit_box
from .quadrature import QuadratureRule
from .spectral import build_operator, decay_bound_check, integral_apply

BC = BoundaryCondition
ALL_FORMS = [(bc, f) for bc in BC for f in ((None,) if bc.is_complex else ("canonical", "simple"))]


def _check(name, value, limit):
    return {"name": name, "value": float(value), "limit": float(limit), "passed": bool(value < limit)}


def orthonormality(M=12):
    out = []
    x, w = QuadratureRule(40, 0.05).nodes(-1.0, 1.0)
    for bc in BC:
        E = eigenfunctions(bc, mode_indices(bc, M), x)
        G = np.conj(E) @ (w[:, None] * E.T)
        out.append(_check(f"orthonormality[{bc}]", np.max(np.abs(G - np.eye(len(G)))), 1e-10))
    return out


def eigen_relation(K=8):
    out = []
    x = np.linspace(-1, 1, 100)
    for bc in BC:
        idx = mode_indices(bc, K)
        lhs = -operator_scale(bc) * eigenfunctions(bc, idx, x, derivative=2)
        rhs = np.asarray(idx if bc is not BC.ANTIPERIODIC else idx + 0.5, dtype=float)[:, None] ** 2 * eigenfunctions(bc, idx, x)
        out.append(_check(f"eigen-relation[{bc}]", np.max(np.abs(lhs - rhs)), 1e-10))
    return out


def extensions(seed=0):
    rng = np.random.default_rng(seed)
    C = unit_box()
    x = rng.uniform(-1, 1, 200)
    out = []
    for mode, sign in (("periodic2", 1.0), ("antiperiodic2", -1.0)):
        e = extend(C, mode)
        d = max(np.max(np.abs(e(x + s) - sign * e(x))) for s in (-2.0, 2.0))
        out.append(_check(f"extension[{mode}]", d, 1e-12))
    s = half_wave_split(C)
    xs = rng.uniform(-1, 1, 200)
    out.append(_check("half-wave reconstruction", np.max(np.abs(s.c1(xs) + s.c2(xs) - C(xs))), 1e-12))
    return out


def operator_properties(M=64, seed=0):
    rng = np.random.default_rng(seed)
    C = unit_box()
    out = []
    for bc, form in ALL_FORMS:
        op = build_operator(C, bc, form, M)
        tag = f"{bc}/{op.form.value}"
        out.append(_check(f"positivity[{tag}]", max(-np.min(op.phi), 0.0), 1e-12))
        cn = np.linalg.norm(op.regulating.conv)
        worst = 0.0
        for _ in range(100):
            u = rng.standard_normal(len(op.phi))
            worst = max(worst, np.linalg.norm(op.regulating.conv * u) - cn * np.linalg.norm(u))
        out.append(_check(f"banach-bound[{tag}]", max(worst, 0.0), 1e-12))
        x = np.linspace(-0.95, 0.95, 16)
        for k in mode_indices(bc, 2)[:3]:
            e = lambda y, k=k: eigenfunctions(bc, [k], y)[0]  # noqa: E731
            lhs = integral_apply(C, e, bc, op.form, x, M=M)
            d = np.max(np.abs(lhs - op.regulating(k) * e(x)))
            out.append(_check(f"diagonal-action[{tag},k={k}]", d, 1e-8))
    return out


def decay_sweep(n=1000, seed=0):
    rng = np.random.default_rng(seed)
    fails = 0
    for _ in range(n):
        c = rng.uniform(1e-3, 5.0)
        m = min(c, 1.0)
        lam = rng.uniform(-m, m)
        t = rng.uniform(-20, 20)
        bc_, bs, ac, as_ = decay_bound_check(c, lam, t)
        fails += (ac > bc_ * (1 + 1e-12) + 1e-15) or (as_ > bs * (1 + 1e-12) + 1e-15)
    return [_check("decay-estimate failures", fails, 0.5)]


def newmark_order():
    w = 2.0
    errs = []
    for n in (100, 200, 400):
        g = newmark.TimeGrid.from_steps(1.0, n)
        tr = newmark.evolve(np.eye(1), np.array([[w * w]]), np.ones(1), np.zeros(1), None, g, frames=1, check=False)
        errs.append(abs(tr.final[0] - np.cos(w)))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    return [_check("newmark second order", max(abs(r - 4.0) for r in ratios), 0.4)]


def stiffness():
    out = []
    C = unit_box()
    space = fem.PolySpace(fem.Mesh.uniform(16), 2)
    expected = {"canonical_periodic": "PSD", "simple_neumann": "PSD"}
    for bc, form in ALL_FORMS:
        A = fem.assemble_stiffness(space, C, bc, form)
        f = A.info["form"]
        ok = A.symmetric and A.classification == expected.get(f, "PD")
        out.append({"name": f"stiffness[{f}]", "value": A.classification, "limit": expected.get(f, "PD"), "passed": bool(ok)})
    return out


def run_all(seed=0):
    results = []
    for fn in (orthonormality, eigen_relation, lambda: extensions(seed), lambda: operator_properties(seed=seed),
               lambda: decay_sweep(seed=seed), newmark_order, stiffness):
        results.extend(fn())
    return results
