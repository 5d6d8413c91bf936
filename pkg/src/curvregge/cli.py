"""``curvregge`` command line: curvature, conv, verify, interp-study.

Exit codes: 0 success, 1 configuration error, 2 metric not SPD, 3 solver
failure, 4 property failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, analysis, geometry, verify
from .assembly import SolverError
from .curvature import MASS_KINDS, TriangleInequalityError, discrete_curvature
from .fields import ConstantField, graph_surface_metric
from .io import read_mesh, write_vtk
from .lagrange import write_nodal_csv
from .mesh import MAX_DEGREE, MeshError
from .quadrature import QuadratureConfig
from .regge import ReggeSpace

EXIT_OK, EXIT_CONFIG, EXIT_SPD, EXIT_SOLVER, EXIT_PROPERTY = 0, 1, 2, 3, 4
EXACT_METRICS = ("gexact", "delta")

log = logging.getLogger("curvregge")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    r: int = 2
    q: int = 1
    mesh: str | None = None
    gen: dict = field(default_factory=lambda: {"n": 16, "perturb": 0.2, "seed": 42})
    seed: int = 42
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)
    mass_kind: str = "consistent"
    solver_tol: float = 1e-12
    exact: str | None = None
    metric: str = "gexact"
    sizes: tuple = (8, 16, 32, 64)
    out: str | None = None
    threads: int = 1
    properties: tuple = ()
    timing: bool = True

    def argv(self) -> list[str]:
        """Command-line arguments that reproduce this run."""
        out = [self.subcommand]
        if self.subcommand != "verify":
            out += ["--r", str(self.r), "--q", str(self.q)]
        if self.subcommand == "curvature":
            if self.mesh:
                out += ["--mesh", self.mesh]
            else:
                out += ["--gen", ",".join(f"{k}={v}" for k, v in self.gen.items())]
            out += ["--metric", self.metric]
            if self.exact:
                out += ["--exact", self.exact]
        if self.subcommand in ("conv", "interp-study"):
            out += ["--sizes", ",".join(map(str, self.sizes)), "--seed", str(self.seed)]
            out += ["--perturb", str(self.gen["perturb"])]
        q = self.quad
        out += ["--tri-degree", str(q.tri_degree), "--edge-points", str(q.edge_points), "--t-points", str(q.t_points)]
        if self.subcommand in ("curvature", "conv"):
            out += ["--solver-tol", repr(self.solver_tol)]
            if self.mass_kind == "lumped":
                out.append("--lumped")
        if self.subcommand == "conv" and not self.timing:
            out.append("--no-timing")
        for prop in self.properties:
            out += ["--property", prop]
        if self.out:
            out += ["--out", self.out]
        out += ["--threads", str(self.threads)]
        return out

    def echo(self) -> str:
        return f"config: curvregge {' '.join(self.argv())}  # version {__version__}"


def parse_gen(spec: str) -> dict:
    """``n=16,perturb=0.2,seed=42`` -> dict; missing keys take defaults."""
    out = {"n": 16, "perturb": 0.2, "seed": 42}
    casts = {"n": int, "perturb": float, "seed": int}
    for item in filter(None, (s.strip() for s in spec.split(","))):
        key, sep, val = item.partition("=")
        if not sep or key not in casts:
            raise ConfigError(f"bad --gen entry {item!r}; expected n=<int>,perturb=<float>,seed=<int>")
        try:
            out[key] = casts[key](val)
        except ValueError:
            raise ConfigError(f"bad value in --gen entry {item!r}") from None
    if out["n"] < 1:
        raise ConfigError("--gen n must be positive")
    return out


def parse_sizes(spec: str) -> tuple:
    try:
        sizes = tuple(int(s) for s in spec.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"bad --sizes {spec!r}; expected comma-separated integers") from None
    if not sizes or min(sizes) < 1:
        raise ConfigError("--sizes needs at least one positive integer")
    return sizes


def resolve_threads(arg: int | None) -> int:
    env = os.environ.get("CURVREGGE_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"CURVREGGE_THREADS={env!r} is not an integer") from None
    else:
        n = arg if arg is not None else (os.cpu_count() or 1)
    if n < 1:
        raise ConfigError("thread count must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvregge", description="Discrete Gaussian curvature of Regge metrics.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, degrees=True):
        if degrees:
            sp.add_argument("--r", type=int, default=2, help="Regge degree (0..3)")
            sp.add_argument("--q", type=int, default=1, help="Lagrange degree (1..3)")
        sp.add_argument("--tri-degree", type=int, default=10, help="triangle quadrature degree")
        sp.add_argument("--edge-points", type=int, default=8, help="Gauss points per edge")
        sp.add_argument("--t-points", type=int, default=10, help="Gauss points in the homotopy parameter")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (env CURVREGGE_THREADS wins)")
        sp.add_argument("-v", "--verbose", action="store_true")
        sp.add_argument("--inject-fault", default=None, help=argparse.SUPPRESS)

    c = sub.add_parser("curvature", help="compute kappa_h on one mesh")
    common(c)
    src = c.add_mutually_exclusive_group()
    src.add_argument("--mesh", help="mesh file ('mesh 2d v=<V> t=<T>' format)")
    src.add_argument("--gen", default="n=16,perturb=0.2,seed=42", help="generated mesh: n=,perturb=,seed=")
    c.add_argument("--metric", choices=EXACT_METRICS, default="gexact", help="metric to interpolate")
    c.add_argument("--exact", choices=("gexact",), default=None, help="report errors against this exact curvature")
    c.add_argument("--lumped", action="store_true", help="row-sum lumped mass matrix")
    c.add_argument("--solver-tol", type=float, default=1e-12)
    c.add_argument("--out", default="kappa_h", help="output prefix for .csv and .vtk")

    cv = sub.add_parser("conv", help="convergence study on perturbed uniform meshes")
    common(cv)
    cv.add_argument("--sizes", default="8,16,32,64")
    cv.add_argument("--seed", type=int, default=42)
    cv.add_argument("--perturb", type=float, default=0.2)
    cv.add_argument("--lumped", action="store_true")
    cv.add_argument("--solver-tol", type=float, default=1e-12)
    cv.add_argument("--out", default=None, help="CSV path (stdout table only if omitted)")
    cv.add_argument("--no-timing", action="store_true", help="leave the seconds column empty (byte-stable CSV)")

    vf = sub.add_parser("verify", help="run the property suites")
    common(vf, degrees=False)
    vf.add_argument("--property", action="append", default=[], choices=sorted(verify.PROPERTIES), help="run only these (repeatable)")

    it = sub.add_parser("interp-study", help="Regge interpolation rates of the test metric")
    common(it)
    it.add_argument("--sizes", default="8,16,32,64")
    it.add_argument("--seed", type=int, default=42)
    it.add_argument("--perturb", type=float, default=0.2)
    it.add_argument("--out", default=None)
    return p


def config_from_args(args) -> RunConfig:
    for name in ("r", "q"):
        val = getattr(args, name, None)
        if val is None:
            continue
        lo = 0 if name == "r" else 1
        if not lo <= val <= MAX_DEGREE:
            raise ConfigError(f"--{name} {val} out of range {lo}..{MAX_DEGREE}")
    for name in ("tri_degree", "edge_points", "t_points"):
        if getattr(args, name) < 1:
            raise ConfigError(f"--{name.replace('_', '-')} must be positive")
    quad = QuadratureConfig(args.tri_degree, args.edge_points, args.t_points)
    cfg = RunConfig(subcommand=args.subcommand, quad=quad, threads=resolve_threads(args.threads))
    cfg.r = getattr(args, "r", cfg.r)
    cfg.q = getattr(args, "q", cfg.q)
    cfg.mass_kind = MASS_KINDS[1] if getattr(args, "lumped", False) else MASS_KINDS[0]
    cfg.solver_tol = getattr(args, "solver_tol", cfg.solver_tol)
    if cfg.solver_tol <= 0:
        raise ConfigError("--solver-tol must be positive")
    cfg.out = getattr(args, "out", None)
    if args.subcommand == "curvature":
        cfg.mesh = args.mesh
        cfg.gen = None if args.mesh else parse_gen(args.gen)
        cfg.exact = args.exact
        cfg.metric = args.metric
    if args.subcommand in ("conv", "interp-study"):
        cfg.sizes = parse_sizes(args.sizes)
        cfg.seed = args.seed
        cfg.gen = {"perturb": args.perturb}
        cfg.timing = not getattr(args, "no_timing", False)
    if args.subcommand == "verify":
        cfg.properties = tuple(args.property)
    return cfg


def cmd_curvature(cfg: RunConfig) -> int:
    if cfg.mesh:
        if not Path(cfg.mesh).is_file():
            raise ConfigError(f"mesh file {cfg.mesh!r} not found")
        mesh = read_mesh(cfg.mesh)
    else:
        mesh = analysis.study_mesh(cfg.gen["n"], cfg.gen["perturb"], cfg.gen["seed"])
    g = graph_surface_metric() if cfg.metric == "gexact" else ConstantField(np.eye(2))
    g_h = ReggeSpace(mesh, cfg.r).interpolate(g)
    res = discrete_curvature(g_h, cfg.q, quad=cfg.quad, mass_kind=cfg.mass_kind, solver_tol=cfg.solver_tol)
    prefix = cfg.out or "kappa_h"
    write_nodal_csv(res.kappa, prefix + ".csv")
    write_vtk(res.kappa, prefix + ".vtk")
    print(f"mesh: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles, h = {mesh.h:.6g}")
    print(f"dofs: regge {g_h.space.dim}, lagrange {res.kappa.space.dim}; cg {res.solver.iterations} its, residual {res.solver.relative_residual:.3g}")
    kappa_norm = analysis.l2_error(res.kappa, lambda x, y: np.zeros_like(x), cfg.quad)
    print(f"||kappa_h||_L2 = {kappa_norm:.12e}")
    if cfg.exact == "gexact":
        e0 = analysis.l2_error(res.kappa, geometry.exact_test_curvature, cfg.quad)
        e1 = analysis.broken_h1_seminorm_error(res.kappa, geometry.exact_test_curvature_gradient, cfg.quad)
        print(f"L2 error = {e0:.12e}  broken H1 error = {e1:.12e}")
    print(f"wrote {prefix}.csv {prefix}.vtk")
    return EXIT_OK


def cmd_convergence(cfg: RunConfig) -> int:
    table = analysis.run_convergence_study(
        cfg.r,
        cfg.q,
        cfg.sizes,
        seed=cfg.seed,
        perturb=cfg.gen["perturb"],
        quad=cfg.quad,
        mass_kind=cfg.mass_kind,
        solver_tol=cfg.solver_tol,
        threads=cfg.threads,
    )
    print(table.format())
    orders = table.orders()
    if orders:
        print("observed L2 orders: " + " ".join(f"{o:.3f}" for o in orders))
    else:
        print("observed L2 orders: none (single mesh)")
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(table.to_csv(timing=cfg.timing))
        print(f"wrote {cfg.out}")
    return EXIT_OK


def cmd_interp_study(cfg: RunConfig) -> int:
    rows = analysis.run_interpolation_study(cfg.r, cfg.sizes, cfg.seed, cfg.gen["perturb"], cfg.quad)
    h = [row.h for row in rows]
    o2 = [None] + (analysis.observed_orders(h, [r.l2_error for r in rows]) if len(rows) > 1 else [])
    o1 = [None] + (analysis.observed_orders(h, [r.h1_error for r in rows]) if len(rows) > 1 else [])
    lines = ["h,l2_error,l2_order,h1_error,h1_order,dofs_regge"]
    for row, a, b in zip(rows, o2, o1):
        fa = "" if a is None else f"{a:.6f}"
        fb = "" if b is None else f"{b:.6f}"
        lines.append(f"{row.h:.12e},{row.l2_error:.12e},{fa},{row.h1_error:.12e},{fb},{row.dofs}")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if cfg.out:
        Path(cfg.out).write_text(text)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, fault: str | None = None) -> int:
    if fault:
        with verify.injected_fault(fault):
            results = verify.run_properties(cfg.properties or None, cfg.quad)
    else:
        results = verify.run_properties(cfg.properties or None, cfg.quad)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    return EXIT_PROPERTY if failed else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        print(cfg.echo(), flush=True)
        if args.subcommand == "curvature":
            return cmd_curvature(cfg)
        if args.subcommand == "conv":
            return cmd_convergence(cfg)
        if args.subcommand == "interp-study":
            return cmd_interp_study(cfg)
        return cmd_verify(cfg, args.inject_fault)
    except (ConfigError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (geometry.NotSPDError, TriangleInequalityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPD
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
