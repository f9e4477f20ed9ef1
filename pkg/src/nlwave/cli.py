"""Command-line entry point.

Subcommands: solve, convergence, spectra, kernel, validate, matrices.
Settings come from an optional flat JSON config file (``--config``) and
command-line flags; flags win.  The merged configuration is echoed as
config.json into the output directory, so a run can be repeated with
``--config <out>/config.json``.

Exit codes: 0 success, 1 failed validation checks, 2 usage error or
unknown subcommand, 3 invalid configuration, 4 runtime failure.  Errors are
also written to stderr as one line of JSON.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import fem, harness, invariants
from .basis import BoundaryCondition, project
from .errors import ConfigError, DomainError, StabilityError
from .micromodulus import half_wave_split, kernel_from_spec
from .micromodulus import extend as extend_kernel
from .spectral import OperatorForm, build_operator

log = logging.getLogger("nlwave")

EXIT_OK, EXIT_CHECKS, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3, 4
SUBCOMMANDS = ("solve", "convergence", "spectra", "kernel", "validate", "matrices")
OUTPUT_ENV = "NLWAVE_OUTPUT_ROOT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    subcommand: str = ""
    bc: str = "periodic"
    form: str = ""
    kernel: str = "unitbox"
    delta: float = 0.5
    sigma: float = 0.25
    M: int = 256
    N: int = 64
    ell: int = 2
    degrees: str = "0,1,2,3"
    levels: str = "3..6"
    T: float = 20.0
    k: float = 0.0
    u0: str = "box"
    v0: str = "zero"
    method: str = "fem"
    frames: int = 200
    points: int = 201
    override: bool = False
    jobs: int = 1
    seed: int = 0
    out: str = ""


def parse_int_list(text):
    """'3..6' -> [3, 4, 5, 6]; '0,2' -> [0, 2]; '1' -> [1]."""
    text = str(text).strip()
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _kernel_params(cfg):
    if cfg.kernel == "box":
        return {"delta": cfg.delta}
    if cfg.kernel == "gaussian":
        return {"sigma": cfg.sigma, "delta": cfg.delta}
    return {}


def validate_config(cfg):
    """Collect every violation and raise one ConfigError."""
    bad = []
    if cfg.subcommand not in SUBCOMMANDS:
        bad.append(f"subcommand must be one of {', '.join(SUBCOMMANDS)}")
    try:
        bc = BoundaryCondition.parse(cfg.bc)
        try:
            OperatorForm.resolve(bc, cfg.form or None)
        except DomainError as exc:
            bad.append(str(exc))
    except DomainError as exc:
        bad.append(str(exc))
    try:
        kernel_from_spec(cfg.kernel, **_kernel_params(cfg))
    except (DomainError, OSError) as exc:
        bad.append(f"kernel: {exc}")
    if cfg.M < 1:
        bad.append("M must be positive")
    if cfg.N < 2:
        bad.append("N must be at least 2")
    if cfg.ell < 0:
        bad.append("ell must be nonnegative")
    try:
        degs = parse_int_list(cfg.degrees)
        if not degs or min(degs) < 0:
            bad.append("degrees must be nonnegative integers")
    except ValueError:
        bad.append(f"cannot parse degrees {cfg.degrees!r}")
    try:
        levs = parse_int_list(cfg.levels)
        if not levs or min(levs) < 1:
            bad.append("levels must be positive integers")
    except ValueError:
        bad.append(f"cannot parse levels {cfg.levels!r}")
    if cfg.T < 0:
        bad.append("T must be nonnegative")
    if cfg.k < 0:
        bad.append("k must be nonnegative (0 picks the default)")
    if cfg.subcommand == "convergence" and cfg.k > 0.005:
        bad.append("convergence runs need k <= 0.005")
    for name in ("u0", "v0"):
        try:
            harness.initial_data(getattr(cfg, name), cfg.bc if cfg.bc else None)
        except (DomainError, ValueError) as exc:
            bad.append(f"{name}: {exc}")
    if cfg.method not in ("fem", "spectral"):
        bad.append("method must be 'fem' or 'spectral'")
    if cfg.frames < 1:
        bad.append("frames must be positive")
    if cfg.points < 2:
        bad.append("points must be at least 2")
    if cfg.jobs < 1:
        bad.append("jobs must be positive")
    if bad:
        raise ConfigError(bad)
    return cfg


def build_parser():
    p = _Parser(prog="nlwave", description="Solvers for the 1-D nonlocal wave equation.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="subcommand")

    def common(sp):
        sp.add_argument("--config", help="flat JSON file of settings; flags override it")
        sp.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV}/<subcommand>)")
        sp.add_argument("--bc", help="periodic | antiperiodic | neumann | dirichlet")
        sp.add_argument("--form", help="canonical | simple | full form name")
        sp.add_argument("--kernel", help="unitbox | box | gaussian | constant | zero | path.csv")
        sp.add_argument("--delta", type=float, help="box/gaussian half-width")
        sp.add_argument("--sigma", type=float, help="gaussian width")
        sp.add_argument("--seed", type=int)

    sp = sub.add_parser("solve", help="evolve initial data and write frames")
    common(sp)
    sp.add_argument("--method", choices=("fem", "spectral"))
    sp.add_argument("--u0")
    sp.add_argument("--v0")
    sp.add_argument("--T", type=float)
    sp.add_argument("--k", type=float, help="time step (default h_min/10)")
    sp.add_argument("--N", type=int)
    sp.add_argument("--ell", type=int)
    sp.add_argument("--M", type=int)
    sp.add_argument("--frames", type=int)
    sp.add_argument("--points", type=int, help="x samples per frame")
    sp.add_argument("--override", action="store_const", const=True, help="allow k > h_min/10")

    sp = sub.add_parser("convergence", help="manufactured-solution convergence table")
    common(sp)
    sp.add_argument("--ell", dest="degrees", help="degrees, e.g. 1 or 0,1,2 or 0..3")
    sp.add_argument("--levels", help="mesh levels, e.g. 3..7")
    sp.add_argument("--T", type=float)
    sp.add_argument("--k", type=float)
    sp.add_argument("--M", type=int, help="modes used for the manufactured source")
    sp.add_argument("--jobs", type=int)

    sp = sub.add_parser("spectra", help="dump k, lambda_k, kernel coefficient, phi")
    common(sp)
    sp.add_argument("--M", type=int)

    sp = sub.add_parser("kernel", help="dump the kernel, its extensions and half-wave split")
    common(sp)
    sp.add_argument("--points", type=int)

    sp = sub.add_parser("validate", help="run the invariant suite")
    common(sp)

    sp = sub.add_parser("matrices", help="write mass and stiffness matrices")
    common(sp)
    sp.add_argument("--N", type=int)
    sp.add_argument("--ell", type=int)
    return p


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a flat JSON object")
    known = {f.name: f.type for f in fields(RunConfig)}
    bad = [f"unknown config key {k!r}" for k in data if k not in known]
    bad += [f"config key {k!r} must be a scalar" for k, v in data.items() if isinstance(v, (dict, list))]
    if bad:
        raise ConfigError(bad)
    return data


def merge_config(args):
    cfg = RunConfig()
    file_values = load_config(args.config) if getattr(args, "config", None) else {}
    bad = []
    for f in fields(RunConfig):
        if f.name in file_values:
            val = file_values[f.name]
            try:
                if f.type is bool or f.type == "bool":
                    if not isinstance(val, bool):
                        raise ValueError
                elif f.type in (int, "int"):
                    if isinstance(val, bool) or int(val) != val:
                        raise ValueError
                    val = int(val)
                elif f.type in (float, "float"):
                    val = float(val)
                else:
                    val = str(val)
            except (TypeError, ValueError):
                bad.append(f"config key {f.name!r} has the wrong type")
                continue
            setattr(cfg, f.name, val)
    if bad:
        raise ConfigError(bad)
    for key, val in vars(args).items():
        if key in ("config", "verbose") or val is None:
            continue
        if hasattr(cfg, key):
            setattr(cfg, key, val)
    cfg.subcommand = args.subcommand
    if cfg.subcommand == "convergence" and "degrees" not in file_values and args.degrees is None:
        cfg.degrees = "0,1,2,3"
    return cfg


def output_dir(cfg):
    if cfg.out:
        path = Path(cfg.out)
    else:
        path = Path(os.environ.get(OUTPUT_ENV, "nlwave-output")) / cfg.subcommand
    path.mkdir(parents=True, exist_ok=True)
    return path


def echo_config(cfg, path):
    data = asdict(cfg)
    data.pop("out")
    with open(path / "config.json", "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(v):
    return f"{v:.10e}"


# subcommands

def cmd_solve(cfg, out):
    kernel = kernel_from_spec(cfg.kernel, **_kernel_params(cfg))
    bc = BoundaryCondition.parse(cfg.bc)
    form = cfg.form or None
    xs = np.linspace(-1.0, 1.0, cfg.points)
    if cfg.method == "spectral":
        sol = harness.spectral_solution(bc, form, kernel, cfg.u0, cfg.v0, cfg.M)
        times = np.linspace(0.0, cfg.T, cfg.frames + 1)
        values = np.array([sol(xs, t) for t in times])
        obs_rows = [(t, float(sol(-1.0, t)), float(sol(1.0, t)), harness.spectral_boundary_defect(sol, t)) for t in times]
        with open(out / "observables.csv", "w") as fh:
            fh.write(harness.SCHEMA_LINE + "\nt,u_left,u_right,bc_defect\n")
            for row in obs_rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    else:
        res = harness.run_evolution(bc, form, kernel, cfg.u0, cfg.v0, cfg.T, cfg.k or None, cfg.N, cfg.ell,
                                    cfg.frames, cfg.override)
        times = res.times
        values = res.values(xs)
        keys = [k for k in res.observables[0] if k != "jump_elements"]
        with open(out / "observables.csv", "w") as fh:
            fh.write(harness.SCHEMA_LINE + "\n" + ",".join(["t"] + keys + ["jump_elements"]) + "\n")
            for t, o in zip(times, res.observables):
                cells = [_fmt(t)] + [_fmt(o[k]) for k in keys] + [" ".join(map(str, o["jump_elements"]))]
                fh.write(",".join(cells) + "\n")
    with open(out / "frames.csv", "w") as fh:
        fh.write(harness.SCHEMA_LINE + "\nt,x,u\n")
        for t, row in zip(times, values):
            for x, u in zip(xs, row):
                fh.write(f"{_fmt(t)},{_fmt(x)},{_fmt(u)}\n")
    with open(out / "field.dat", "w") as fh:
        fh.write("# x t u  (gnuplot: splot 'field.dat' with pm3d)\n")
        for t, row in zip(times, values):
            for x, u in zip(xs, row):
                fh.write(f"{x: .8e} {t: .8e} {u: .8e}\n")
            fh.write("\n")
    return {"frames": len(times), "files": ["frames.csv", "observables.csv", "field.dat"]}


def cmd_convergence(cfg, out):
    kernel = kernel_from_spec(cfg.kernel, **_kernel_params(cfg))
    report = harness.run_convergence(
        bcs=(cfg.bc,), degrees=parse_int_list(cfg.degrees), levels=parse_int_list(cfg.levels),
        k=cfg.k or 0.005, T=cfg.T, form=cfg.form or None, kernel=kernel, M=max(cfg.M, 1024), jobs=cfg.jobs,
    )
    report.to_csv(out / "convergence.csv")
    table = report.table()
    (out / "convergence.txt").write_text(table)
    sys.stdout.write(table)
    return {"rows": len(report.rows), "files": ["convergence.csv", "convergence.txt"]}


def cmd_spectra(cfg, out):
    kernel = kernel_from_spec(cfg.kernel, **_kernel_params(cfg))
    op = build_operator(kernel, cfg.bc, cfg.form or None, cfg.M)
    reg = op.regulating
    # coeff is <e_k|C> in the basis of the boundary condition; symbol is the
    # convolution symbol of the chosen form (they differ for the simple forms)
    coeff = project(op.bc, kernel, cfg.M).coefficients
    with open(out / "spectra.csv", "w") as fh:
        fh.write(harness.SCHEMA_LINE + f"\n# form={op.form.value} c={_fmt(reg.c)} c_id={_fmt(reg.c_id)}\n")
        fh.write("k,lambda,coeff,symbol,phi\n")
        for k, lam, cc, sym, ph in zip(reg.indices, reg.eigenvalues, coeff, reg.conv, reg.values):
            fh.write(f"{k},{lam:.6g},{_fmt(np.real(cc))},{_fmt(sym)},{_fmt(ph)}\n")
    return {"modes": len(reg.indices), "c_id": reg.c_id, "files": ["spectra.csv"]}


def cmd_kernel(cfg, out):
    kernel = kernel_from_spec(cfg.kernel, **_kernel_params(cfg))
    n = max(cfg.points, 2)
    x3 = np.linspace(-3.0, 3.0, 3 * (n - 1) + 1)
    p, a = extend_kernel(kernel, "periodic2"), extend_kernel(kernel, "antiperiodic2")
    with open(out / "extensions.dat", "w") as fh:
        fh.write("# x C C_p C_a\n")
        for x, c, cp, ca in zip(x3, kernel(x3), p(x3), a(x3)):
            fh.write(f"{x: .8e} {c: .8e} {cp: .8e} {ca: .8e}\n")
    info = {"files": ["extensions.dat"]}
    if kernel.is_even:
        split = half_wave_split(kernel)
        x1 = np.linspace(-1.0, 1.0, n)
        with open(out / "halfwave.dat", "w") as fh:
            fh.write(f"# k_NC = {split.k_NC:.12e}\n# x C1 C2\n")
            for x, c1, c2 in zip(x1, split.c1(x1), split.c2(x1)):
                fh.write(f"{x: .8e} {c1: .8e} {c2: .8e}\n")
        info["files"].append("halfwave.dat")
        info["k_NC"] = split.k_NC
    return info


def cmd_validate(cfg, out):
    results = invariants.run_all(cfg.seed)
    with open(out / "validate.json", "w") as fh:
        json.dump(results, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for r in results:
        sys.stdout.write(f"{'PASS' if r['passed'] else 'FAIL'} {r['name']}\n")
    failed = [r["name"] for r in results if not r["passed"]]
    return {"checks": len(results), "failed": failed, "files": ["validate.json"]}


def cmd_matrices(cfg, out):
    kernel = kernel_from_spec(cfg.kernel, **_kernel_params(cfg))
    space = fem.PolySpace(fem.Mesh.uniform(cfg.N), cfg.ell)
    Mass = fem.assemble_mass(space)
    A = fem.assemble_stiffness(space, kernel, cfg.bc, cfg.form or None)
    for name, mat in (("M", Mass.matrix), ("A", A.matrix)):
        np.savetxt(out / f"{name}.csv", mat, delimiter=",", fmt="%.16e", header="schema=1", comments="# ")
        i, j = np.nonzero(mat)
        with open(out / f"{name}.triplets", "w") as fh:
            fh.write(f"# {mat.shape[0]} {mat.shape[1]} {len(i)}\n")
            for a, b in zip(i, j):
                fh.write(f"{a} {b} {mat[a, b]:.16e}\n")
    return {"n": space.dim, "classification": A.classification, "c_id": A.info["c_id"],
            "files": ["M.csv", "A.csv", "M.triplets", "A.triplets"]}


COMMANDS = {
    "solve": cmd_solve,
    "convergence": cmd_convergence,
    "spectra": cmd_spectra,
    "kernel": cmd_kernel,
    "validate": cmd_validate,
    "matrices": cmd_matrices,
}


def _fail(kind, message, code, violations=None):
    payload = {"error": kind, "message": message, "exit_code": code}
    if violations:
        payload["violations"] = violations
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if not args.subcommand:
        return _fail("usage", f"missing subcommand; choose from {', '.join(SUBCOMMANDS)}", EXIT_USAGE)
    try:
        cfg = validate_config(merge_config(args))
    except ConfigError as exc:
        return _fail("config", str(exc), EXIT_CONFIG, exc.violations)
    try:
        out = output_dir(cfg)
        echo_config(cfg, out)
        info = COMMANDS[cfg.subcommand](cfg, out)
    except (StabilityError, DomainError, OSError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_RUNTIME)
    summary = {"subcommand": cfg.subcommand, "out": str(out), **info}
    sys.stdout.write(json.dumps(summary, sort_keys=True, default=float) + "\n")
    if cfg.subcommand == "validate" and info["failed"]:
        return EXIT_CHECKS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
