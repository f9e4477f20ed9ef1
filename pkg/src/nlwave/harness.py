"""Experiments: manufactured-solution convergence, initial-data evolutions
with observables, and spectral/FEM cross-validation."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import fem, newmark
from .basis import BoundaryCondition, eigenpair, mode_indices, synthesize
from .errors import DomainError, StabilityError
from .micromodulus import unit_box
from .spectral import OperatorForm, build_operator, integral_apply, solve_homogeneous

log = logging.getLogger(__name__)
BC = BoundaryCondition

SCHEMA_LINE = "# schema=1"


# initial data

def _u0_disc(x):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= 0.25, 1.5, 0.0)


_u0_disc.breakpoints = (-0.25, 0.25)
_u0_disc.jumps = (-0.25, 0.25)


def _u0_cont(x):
    x = np.asarray(x, dtype=float)
    left = (1 + 4 * x) ** 3 * (96 * x**2 - 12 * x + 1)
    right = (1 - 4 * x) ** 3 * (96 * x**2 + 12 * x + 1)
    return np.where((x >= -0.25) & (x < 0), left, np.where((x >= 0) & (x <= 0.25), right, 0.0))


_u0_cont.breakpoints = (-0.25, 0.0, 0.25)
_u0_cont.jumps = ()


def _zero(x):
    return np.zeros(np.shape(x))


_zero.breakpoints = ()
_zero.jumps = ()


INITIAL_DATA = {"box": _u0_disc, "disc": _u0_disc, "bump": _u0_cont, "cont": _u0_cont, "zero": _zero}


def initial_data(name, bc=None):
    """Named initial data; ``mode<k>`` gives the eigenfunction e_k of ``bc``."""
    if name in INITIAL_DATA:
        return INITIAL_DATA[name]
    if str(name).startswith("mode"):
        if bc is None:
            raise DomainError("eigenmode initial data needs a boundary condition")
        ep = eigenpair(bc, int(str(name)[4:]))

        def f(x):
            return np.real(ep(np.asarray(x, dtype=float)))

        f.breakpoints = ()
        f.jumps = ()
        return f
    raise DomainError(f"unknown initial data {name!r}; choose from {sorted(INITIAL_DATA)} or mode<k>")


# manufactured solutions u = t^2 X(x)

MANUFACTURED_X = {
    BC.PERIODIC: lambda x: np.sin(np.pi * x) + np.cos(np.pi * x),
    BC.ANTIPERIODIC: lambda x: x**4 - 1.0,
    BC.NEUMANN: lambda x: (x**2 - 1.0) ** 2 - 8.0 / 15.0,
    BC.DIRICHLET: lambda x: 1.0 + np.sin(np.pi * x) + np.cos(np.pi * x),
}


@dataclass(frozen=True, eq=False)
class ManufacturedCase:
    """Exact solution u = t^2 X with source b = 2 X + t^2 phi(A_BC) X.

    phi(A_BC) X is evaluated spectrally as c_id X + sum_k (phi_k - c_id) X_k e_k,
    so only the smoothing part is truncated.
    """

    bc: BoundaryCondition
    form: OperatorForm
    kernel: object
    X: object
    M: int = 1024

    @property
    def op(self):
        return _operator_cache(self.kernel, self.bc, self.form, self.M)

    def exact(self, x, t):
        return t * t * self.X(np.asarray(x, dtype=float))

    @cached_property
    def _smooth_part(self):
        op = self.op
        coeffs = op.project(self.X)
        return op.c_id, coeffs.with_coefficients((op.phi - op.c_id) * coeffs.coefficients)

    def Y(self, x):
        c_id, smooth = self._smooth_part
        return c_id * self.X(np.asarray(x, dtype=float)) + synthesize(smooth, x, real=True)

    def source(self, x, t):
        return 2.0 * self.X(np.asarray(x, dtype=float)) + t * t * self.Y(x)

    def residual(self, n=20, seed=0, T=20.0):
        """max |u_tt + phi(A) u - b| at random (x, t), phi(A) u from the integral form."""
        rng = np.random.default_rng(seed)
        x = rng.uniform(-1, 1, n)
        t = rng.uniform(0, T, n)
        phiX = integral_apply(self.kernel, self.X, self.bc, self.form, x, M=self.M)
        lhs = 2.0 * self.X(x) + t * t * phiX
        return float(np.max(np.abs(lhs - self.source(x, t))))


_OP_CACHE = {}


def _operator_cache(kernel, bc, form, M):
    key = (id(kernel), bc, form, M)
    if key not in _OP_CACHE:
        _OP_CACHE[key] = (kernel, build_operator(kernel, bc, form, M))
    return _OP_CACHE[key][1]


_UNIT_BOX = unit_box()


def manufactured_case(bc, form=None, kernel=None, M=1024):
    bc = BC.parse(bc)
    form = OperatorForm.resolve(bc, form)
    return ManufacturedCase(bc, form, kernel or _UNIT_BOX, MANUFACTURED_X[bc], M)


# convergence

@dataclass
class ConvergenceReport:
    rows: list = field(default_factory=list)

    def add(self, **row):
        self.rows.append(row)

    def sort(self):
        self.rows.sort(key=lambda r: (r["bc"], r["form"], r["ell"], r["level"]))
        self._fill_orders()
        return self

    def _fill_orders(self):
        prev = {}
        for r in self.rows:
            key = (r["bc"], r["form"], r["ell"])
            p = prev.get(key)
            if p is not None and p["level"] == r["level"] - 1 and p["error"] > 0 and r["error"] > 0:
                r["order"] = -math.log2(r["error"] / p["error"])
            else:
                r["order"] = None
            prev[key] = r

    def error(self, bc, ell, level):
        for r in self.rows:
            if r["bc"] == BC.parse(bc).value and r["ell"] == ell and r["level"] == level:
                return r["error"]
        raise KeyError((bc, ell, level))

    def order(self, bc, ell, level):
        for r in self.rows:
            if r["bc"] == BC.parse(bc).value and r["ell"] == ell and r["level"] == level:
                return r["order"]
        raise KeyError((bc, ell, level))

    def to_csv(self, path=None):
        lines = [SCHEMA_LINE, "bc,form,ell,level,N,error,order"]
        for r in self.rows:
            order = "" if r["order"] is None else f"{r['order']:.4f}"
            lines.append(f"{r['bc']},{r['form']},{r['ell']},{r['level']},{r['N']},{r['error']:.6e},{order}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def table(self):
        """Errors and orders laid out by (ell, level) rows and bc columns."""
        bcs = sorted({r["bc"] for r in self.rows}, key=lambda b: list(BC._value2member_map_).index(b))
        keys = sorted({(r["ell"], r["level"]) for r in self.rows})
        head = f"{'ell':>3} {'mesh':>4} " + " ".join(f"{b:>10} {'order':>6}" for b in bcs)
        out = [head, "-" * len(head)]
        for ell, lev in keys:
            cells = []
            for b in bcs:
                match = [r for r in self.rows if r["bc"] == b and r["ell"] == ell and r["level"] == lev]
                if match:
                    r = match[0]
                    o = "-" if r["order"] is None else f"{r['order']:.2f}"
                    cells.append(f"{r['error']:10.2e} {o:>6}")
                else:
                    cells.append(f"{'':>10} {'':>6}")
            out.append(f"{ell:>3} {lev:>4} " + " ".join(cells))
        return "\n".join(out) + "\n"


def _convergence_run(args):
    bc, form, kernel, ell, level, k, T, M = args
    case = manufactured_case(bc, form, kernel, M)
    space = fem.PolySpace(fem.Mesh.level(level), ell)
    A = fem.assemble_stiffness(space, case.kernel, case.bc, case.form)
    Mass = fem.assemble_mass(space)
    LX = fem.load_vector(space, case.X)
    LY = fem.load_vector(space, case.Y)

    def b(t):
        return 2.0 * LX + t * t * LY

    zero = np.zeros(space.dim)
    # the operator is bounded, so the h/10 rule is not needed for stability;
    # the power-iteration check still warns on a real violation
    traj = newmark.evolve(Mass, A, zero, zero, b, newmark.TimeGrid(k, T), h_min=space.mesh.h_min, override=True, frames=1)
    uT = traj.final
    if not np.all(np.isfinite(uT)):
        raise StabilityError(f"non-finite solution for {bc} ell={ell} level={level}")
    err = fem.l2_error(space, uT, lambda x: case.exact(x, T))
    ref = fem.l2_norm(space, lambda x: case.exact(x, T))
    return dict(bc=case.bc.value, form=case.form.value, ell=ell, level=level, N=space.mesh.N, error=err / ref)


def run_convergence(bcs=("periodic",), degrees=(0, 1, 2, 3), levels=(3, 4, 5, 6), k=0.005, T=20.0,
                    form=None, kernel=None, M=1024, jobs=1):
    """Relative L2 errors at time T on uniform meshes with N = 2^level."""
    if k > 0.005 + 1e-15:
        raise DomainError("convergence runs need k <= 0.005")
    tasks = []
    for bc in bcs:
        bc = BC.parse(bc)
        fm = OperatorForm.resolve(bc, form if (form is None or form in ("canonical", "simple")) else form)
        for ell in degrees:
            for lev in levels:
                tasks.append((bc, fm, kernel, ell, lev, k, T, M))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_convergence_run, tasks))
    else:
        rows = [_convergence_run(t) for t in tasks]
    report = ConvergenceReport()
    for r in rows:
        report.add(**r)
    return report.sort()


def discrete_manufactured_error(space, A, Xh, k=0.005, T=1.0):
    """Error of Newmark for u = t^2 X_h with X_h in V_h and b = 2 M X_h + t^2 A X_h."""
    Mass = fem.assemble_mass(space)
    MX, AX = Mass @ Xh, A @ Xh
    zero = np.zeros(space.dim)
    traj = newmark.evolve(Mass, A, zero, zero, lambda t: 2 * MX + t * t * AX, newmark.TimeGrid(k, T),
                          override=True, frames=1, check=False)
    return float(np.max(np.abs(traj.final - T * T * Xh)))


# observables

def boundary_slope(f, side, width, degree=2, samples=17):
    """One-sided derivative at x = side (+-1) from a least-squares polynomial
    fit of f over the ``width`` next to the boundary."""
    if side > 0:
        x = np.linspace(1.0 - width, 1.0, samples)
    else:
        x = np.linspace(-1.0, -1.0 + width, samples)
    coeffs = np.polynomial.polynomial.polyfit(x - side, f(x), degree)
    return float(coeffs[1])


def fem_boundary_slope(space, coeffs, side):
    """Slope at +-1 from a fit of degree max(l,1) over the two boundary elements."""
    h = space.mesh.h
    width = h[-1] + h[-2] if side > 0 else h[0] + h[1]
    deg = max(space.degree, 1)
    eps = 1e-12

    def f(x):
        return fem.evaluate(space, coeffs, np.clip(x, -1 + eps, 1 - eps))

    return boundary_slope(f, side, width, degree=deg, samples=4 * (space.degree + 2) + 1)


def symmetry_defect(f, x=None):
    """max |f(x) - f(-x)| over sample points in [0, 1]."""
    if x is None:
        x = np.linspace(0.0, 1.0, 201)
    x = np.asarray(x, dtype=float)
    return float(np.max(np.abs(f(x) - f(-x))))


def interior_points(space, per_element=5):
    """Gauss points of every element, which never coincide with mesh nodes."""
    return np.concatenate([fem._element_nodes(space, K, order=per_element)[0] for K in range(space.mesh.N)])


@dataclass
class EvolutionResult:
    bc: BoundaryCondition
    form: OperatorForm
    space: object
    times: np.ndarray
    frames: np.ndarray
    observables: list
    c_id: float

    def values(self, x):
        return np.array([fem.evaluate(self.space, u, x) for u in self.frames])


def frame_observables(space, coeffs, bc, jumps=(), symmetric=False, jump_threshold=0.05):
    left, right = fem.traces(space, coeffs)
    u_l, u_r = float(left[0]), float(right[-1])
    obs = {"u_left": u_l, "u_right": u_r}
    bc = BC.parse(bc)
    if bc is BC.DIRICHLET:
        obs["bc_defect"] = max(abs(u_l), abs(u_r))
    elif bc is BC.PERIODIC:
        obs["bc_defect"] = abs(u_l - u_r)
    elif bc is BC.ANTIPERIODIC:
        obs["bc_defect"] = abs(u_l + u_r)
    else:
        obs["bc_defect"] = max(abs(fem_boundary_slope(space, coeffs, -1)), abs(fem_boundary_slope(space, coeffs, 1)))
    obs["slope_left"] = fem_boundary_slope(space, coeffs, -1)
    obs["slope_right"] = fem_boundary_slope(space, coeffs, 1)
    jump = fem.interface_jumps(space, coeffs)
    interior = space.mesh.nodes[1:-1]
    for xj in jumps:
        i = int(np.argmin(np.abs(interior - xj)))
        obs[f"jump@{xj:g}"] = float(jump[i])
    big = np.nonzero(np.abs(jump) > jump_threshold)[0]
    # interface i sits between elements i and i+1
    obs["jump_elements"] = sorted({int(i) for i in big} | {int(i) + 1 for i in big})
    if symmetric:
        pts = interior_points(space)
        obs["symmetry_defect"] = symmetry_defect(lambda x: fem.evaluate(space, coeffs, x), pts[pts > 0])
    return obs


def run_evolution(bc, form=None, kernel=None, u0="box", v0="zero", T=20.0, k=None, N=128, ell=2,
                  frames=200, override=False, jump_threshold=0.05):
    """Homogeneous evolution (b = 0) with per-frame observables."""
    bc = BC.parse(bc)
    form = OperatorForm.resolve(bc, form)
    kernel = kernel or unit_box()
    u0f, v0f = initial_data(u0, bc), initial_data(v0, bc)
    mesh = fem.Mesh.uniform(N)
    for p in tuple(u0f.breakpoints) + tuple(v0f.breakpoints):
        if not mesh.is_aligned([p]):
            raise DomainError(f"mesh with N={N} is not aligned with the data breakpoint {p}")
    space = fem.PolySpace(mesh, ell)
    A = fem.assemble_stiffness(space, kernel, bc, form)
    Mass = fem.assemble_mass(space)
    k = k or mesh.h_min / 10
    grid = newmark.TimeGrid.from_steps(T, int(math.ceil(T / k - 1e-9)))
    U0, V0 = fem.l2_project(space, u0f), fem.l2_project(space, v0f)
    traj = newmark.evolve(Mass, A, U0, V0, None, grid, h_min=mesh.h_min, override=override, frames=frames)
    symmetric = symmetry_defect(u0f) < 1e-14 and symmetry_defect(v0f) < 1e-14
    jumps = tuple(u0f.jumps) + tuple(v0f.jumps)
    obs = [frame_observables(space, u, bc, jumps, symmetric, jump_threshold) for u in traj.frames]
    return EvolutionResult(bc, form, space, traj.times, traj.frames, obs, A.info["c_id"])


def adjacent_elements(mesh, points):
    """Elements sharing a node at one of ``points``."""
    out = set()
    for p in points:
        i = int(np.argmin(np.abs(mesh.nodes - p)))
        if 0 < i < mesh.N:
            out |= {i - 1, i}
    return sorted(out)


# spectral counterparts

def spectral_solution(bc, form=None, kernel=None, u0="bump", v0="zero", M=256):
    bc = BC.parse(bc)
    op = build_operator(kernel or unit_box(), bc, form, M)
    return solve_homogeneous(op, initial_data(u0, bc), initial_data(v0, bc))


def spectral_boundary_defect(sol, t, width=0.0625):
    """Boundary-condition defect of a spectral solution at time t."""
    f = lambda x: sol(x, t)  # noqa: E731
    u_l, u_r = float(sol(-1.0, t)), float(sol(1.0, t))
    if sol.bc is BC.DIRICHLET:
        return max(abs(u_l), abs(u_r))
    if sol.bc is BC.PERIODIC:
        return abs(u_l - u_r)
    if sol.bc is BC.ANTIPERIODIC:
        return abs(u_l + u_r)
    return max(abs(boundary_slope(f, -1, width)), abs(boundary_slope(f, 1, width)))


def cross_validate(bc, form=None, kernel=None, u0="bump", v0="zero", t_checkpoints=(1.0, 5.0, 10.0),
                   M=256, N=64, ell=2, k=None):
    """max over checkpoints of ||u_spectral - u_fem||_0."""
    bc = BC.parse(bc)
    kernel = kernel or unit_box()
    sol = spectral_solution(bc, form, kernel, u0, v0, M)
    space = fem.PolySpace(fem.Mesh.uniform(N), ell)
    A = fem.assemble_stiffness(space, kernel, bc, form)
    Mass = fem.assemble_mass(space)
    u0f, v0f = initial_data(u0, bc), initial_data(v0, bc)
    U, V = fem.l2_project(space, u0f), fem.l2_project(space, v0f)
    k = k or space.mesh.h_min / 10
    worst = 0.0
    # march checkpoint to checkpoint with one grid so no restart error enters
    T = max(t_checkpoints)
    steps = int(math.ceil(T / k - 1e-9))
    k = T / steps
    solver = newmark.MassSolver(Mass)
    A_mat = A.matrix
    targets = {int(round(t / k)): t for t in t_checkpoints}
    if any(abs(n * k - t) > 1e-9 for n, t in targets.items()):
        raise DomainError("checkpoints must be multiples of the time step")
    u_prev, u = U, newmark.first_step(Mass, A_mat, U, V, np.zeros_like(U), k, solver)
    results = {}
    for n in range(1, steps + 1):
        if n in targets:
            t = targets[n]
            bps = tuple(u0f.breakpoints) + tuple(v0f.breakpoints)
            err = fem.l2_error(space, u, lambda x, t=t: sol(x, t), breakpoints=bps)
            results[t] = err
            worst = max(worst, err)
        if n == steps:
            break
        u_prev, u = u, 2.0 * u - u_prev - k * k * solver(A_mat @ u)
    return worst, results
