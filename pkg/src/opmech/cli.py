"""Command-line front end: ``opmech derive | check | simulate``.

Exit codes: 0 success, 1 failed checks, 2 bad input, 3 derivation error,
4 time step violates the CFL bound.
"""
from __future__ import annotations

import argparse
import math
import sys as _sys
from pathlib import Path

import numpy as np
import sympy as sp

from .kvn.flow import compile_flow
from .kvn.propagate import CFLError, courant_number, simulate
from .kvn.wavefunction import Axis, Wavefunction
from .mechanics.builtins import BUILTINS, builtin
from .mechanics.chart import SingularChartError
from .mechanics.dynamics import generalized_forces, tension
from .mechanics.liouvillian import DerivationError, derive
from .mechanics.numeric import UnresolvedSymbolError
from .mechanics.verify import momentum_lines, run_checks
from .scalar import ParseError, parse_expr, to_latex, to_text
from .svg import write_plot
from .sysfile import SimConfig, SysFileError, load_system

EXIT_FAIL, EXIT_INPUT, EXIT_DERIVE, EXIT_CFL = 1, 2, 3, 4
MAX_GRID_4D = 64

DEFAULTS = {
    "free_particle": SimConfig(
        mode="ensemble", dt=0.01, t_final=2.0, points=2000, width=0.1,
        center={"v_x": 1.0}, observables=["x", "v_x"], record_every=10),
    "harmonic_oscillator": SimConfig(
        mode="grid", grid=256, t_final=6 * math.pi, width=1.0, center={"x": 1.0},
        bounds={"x": (-6.5, 6.5), "v_x": (-6.5, 6.5)}, observables=["x", "v_x"], record_every=10),
    "charged_particle": SimConfig(
        mode="ensemble", dt=0.005, t_final=5.0, points=2000, width=0.05,
        center={"x": 1.0, "v_y": 0.5}, observables=["x", "y", "z"], record_every=10),
    "planar_pendulum": SimConfig(
        mode="grid", grid=256, t_final=4.0, width={"theta": 0.02, "v_theta": 0.06},
        center={"theta": 0.05}, bounds={"theta": (-0.16, 0.16), "v_theta": (-0.5, 0.5)},
        observables=["theta", "v_theta", "tension"], record_every=5),
    # conical orbit: cos(theta0) = g / (R omega^2)
    "spherical_pendulum": SimConfig(
        mode="ensemble", dt=1e-3, t_final=1.0, points=100_000, width=1e-3,
        center={"theta": 1.0, "v_phi": math.sqrt(9.81 / math.cos(1.0))},
        observables=["theta", "v_phi", "tension"], record_every=10),
}


class UsageError(ValueError):
    pass


def load(source: str):
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        if name not in BUILTINS:
            raise UsageError(f"unknown builtin {name!r}; choose from {', '.join(sorted(BUILTINS))}")
        return builtin(name), DEFAULTS.get(name)
    return load_system(source)


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# derive ---------------------------------------------------------------------

def cmd_derive(args) -> int:
    sysm, _ = load(args.system)
    eom = derive(sysm)
    out = _outdir(args.out)
    txt = [eom.to_text().rstrip("\n")]
    if eom.constraint_forces:
        txt.append("")
        for q, R in zip(sysm.constrained, eom.constraint_forces):
            txt.append(f"R_{q} = {to_text(R)}")
        if sysm.l == 1:
            txt.append(f"T = {to_text(tension(sysm, eom))}")
    txt.append("")
    txt.extend(momentum_lines(sysm))
    (out / "eom.txt").write_text("\n".join(txt) + "\n")
    (out / "eom.tex").write_text(eom.to_latex())
    rows = []
    for q, Q in zip(sysm.coords, generalized_forces(sysm)):
        rows.append(rf"Q_{{{sp.latex(q)}}} &= {to_latex(Q)}")
    for q, R in zip(sysm.constrained, eom.constraint_forces):
        rows.append(rf"R^{{\mathrm{{gen}}}}_{{{sp.latex(q)}}} &= {to_latex(R)}")
    if sysm.l == 1:
        rows.append(rf"T &= {to_latex(tension(sysm, eom))}")
    body = " \\\\\n".join(rows) if rows else r"\text{no forces}"
    (out / "forces.tex").write_text("\\begin{align}\n" + body + "\n\\end{align}\n")
    print(eom.to_text(), end="")
    return 0


# check ----------------------------------------------------------------------

def cmd_check(args) -> int:
    sysm, _ = load(args.system)
    rep = run_checks(sysm, tol=args.tol, seed=args.seed)
    out = _outdir(args.out)
    (out / "check.txt").write_text(rep.to_text())
    fails = rep.failures()
    print(f"{len(rep.rows) - len(fails)}/{len(rep.rows)} checks passed")
    for r in fails:
        print(f"FAIL  {r.name}  expected={r.expected}  got={r.got}")
    return 0 if not fails else EXIT_FAIL


# simulate -------------------------------------------------------------------

def observable_expr(name: str, sysm, eom):
    if name == "tension":
        return tension(sysm, eom)
    for q, R in zip(sysm.constrained, eom.constraint_forces):
        if name == f"R_{q}":
            return R
    if name in sysm.table and sysm.table[name] in eom.state_symbols():
        return sysm.table[name]
    return parse_expr(name, sysm.table)


def build_state(cfg: SimConfig, names, seed: int):
    center = [cfg.center.get(n, 0.0) for n in names]
    if isinstance(cfg.width, dict):
        width = [cfg.width.get(n, 0.1) for n in names]
    else:
        width = [cfg.width] * len(names)
    if cfg.mode == "ensemble":
        return Wavefunction.gaussian_ensemble(center, width, cfg.points, seed, names)
    if cfg.mode != "grid":
        raise UsageError(f"unknown mode {cfg.mode!r}")
    d = len(names)
    if d > 4:
        raise UsageError("grid mode supports at most 2 degrees of freedom; use --ensemble")
    if d == 4 and cfg.grid > MAX_GRID_4D:
        raise UsageError(f"4-dimensional grids are limited to {MAX_GRID_4D} points per axis")
    axes = []
    for n, c, w in zip(names, center, width):
        lo, hi = cfg.bounds.get(n, (c - 6 * w, c + 6 * w))
        axes.append(Axis(lo, hi, cfg.grid))
    return Wavefunction.gaussian_grid(axes, center, width, names=names)


def cmd_simulate(args) -> int:
    sysm, cfg = load(args.system)
    cfg = SimConfig(**vars(cfg)) if cfg is not None else SimConfig()
    if args.dt is not None:
        cfg.dt = args.dt
    if args.t_final is not None:
        cfg.t_final = args.t_final
    if args.grid is not None:
        cfg.mode, cfg.grid = "grid", args.grid
    if args.ensemble:
        cfg.mode = "ensemble"
    if args.points is not None:
        cfg.points = args.points
    if args.kernel is not None:
        cfg.kernel = args.kernel
    seed = args.seed if args.seed is not None else cfg.seed
    if cfg.t_final <= 0 or (cfg.dt is not None and cfg.dt <= 0):
        raise UsageError("need t_final > 0 and dt > 0")

    eom = derive(sysm)
    flow = compile_flow(eom)
    names = [s.name for s in eom.state_symbols()]
    obs_names = cfg.observables or names[: eom.n]
    obs = {n: observable_expr(n, sysm, eom) for n in obs_names}
    # constraint functions, pulled back onto the reduced phase space
    drift = {}
    for i, (f, C) in enumerate(zip(sysm.constraints.functions, sysm.constraints.constants)):
        drift[f"__f{i}"] = sysm.on_tq(sysm.chart.to_chart(f)) - C
    psi = build_state(cfg, names, seed)

    dt = cfg.dt
    if dt is None:
        if psi.mode != "grid":
            raise UsageError("ensemble runs need --dt")
        _, dt = courant_number(psi, flow, 1.0)
    steps = max(1, int(math.ceil(cfg.t_final / dt - 1e-9)))
    dt = cfg.t_final / steps
    psi, rec, rep = simulate(psi, flow, dt, steps, {**obs, **drift},
                             record_every=max(1, cfg.record_every), kernel=cfg.kernel)
    out = _outdir(args.out)
    public = type(rec)(list(obs))
    for t, row, nrm in zip(rec.times, rec.rows, rec.norms):
        public.append(t, row[: len(obs)], nrm)
    public.write_csv(out / "trajectory.csv")
    write_plot(out / "trajectory.svg", public.t,
               {n: public.column(n) for n in public.names}, title=f"{sysm.name}: expectation values")
    dmax = max((abs(r[len(obs) + i]) for r in rec.rows for i in range(len(drift))), default=0.0)
    norms = np.array(rec.norms)
    print(f"system: {sysm.name}  mode: {psi.mode}  steps: {steps}  dt: {dt:.6g}")
    print(f"final norm: {norms[-1]:.12f}  max norm drift: {np.max(np.abs(norms - norms[0])):.3e}")
    print(f"max constraint drift: {dmax:.3e}  leakage: {rep.leakage:.3e}")
    for w in rep.warnings:
        print(f"warning: {w}")
    return 0


# entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opmech", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", required=True,
                        help="builtin:<name> or path to a system file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=None)
    d = sub.add_parser("derive", parents=[common], help="write eom.tex, eom.txt, forces.tex")
    d.set_defaults(func=cmd_derive)
    c = sub.add_parser("check", parents=[common], help="run invariant checks, write check.txt")
    c.add_argument("--tol", type=float, default=1e-9)
    c.set_defaults(func=cmd_check)
    s = sub.add_parser("simulate", parents=[common], help="propagate, write CSV and SVG")
    s.add_argument("--dt", type=float)
    s.add_argument("--t-final", dest="t_final", type=float)
    s.add_argument("--grid", type=int, help="grid points per axis (selects grid mode)")
    s.add_argument("--ensemble", action="store_true", help="use ensemble mode")
    s.add_argument("--points", type=int, help="ensemble size")
    s.add_argument("--kernel", choices=("cubic-spline", "catmull-rom"))
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "tol", 1.0) <= 0:
        print("error: --tol must be positive", file=_sys.stderr)
        return EXIT_INPUT
    if args.command == "check" and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except SysFileError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT
    except ParseError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT
    except (UsageError, FileNotFoundError, UnresolvedSymbolError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT
    except (DerivationError, SingularChartError) as exc:
        print(f"derivation error: {exc}", file=_sys.stderr)
        return EXIT_DERIVE
    except CFLError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        print(f"suggested dt: {exc.suggested_dt:.6g}", file=_sys.stderr)
        return EXIT_CFL


if __name__ == "__main__":
    _sys.exit(main())
