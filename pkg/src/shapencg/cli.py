"""Command-line front end: ``run``, ``compare``, ``check-derivative``, ``mesh-info``.

Settings come from built-in defaults, then the per-problem defaults, then an
optional ``key=value`` config file, then command-line flags.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .mesh import (MeshError, TriMesh, atomic_write_text, generate_channel_with_obstacle,
                   generate_disk, generate_square_with_interface, read_native, write_native,
                   write_vtk)
from .optimize import THRESHOLDS, LineSearchParams, Method, OptHistory, RestartPolicy, run
from .problems import EITProblem, PoissonProblem, StokesObstacleProblem, load_or_synthesize
from .shape_core import ElasticityParams, fd_check, random_smooth_field

log = logging.getLogger("shapencg")

PROBLEMS = ("poisson", "eit", "stokes")
ALL_METHODS = ("gd", "lbfgs1", "lbfgs3", "lbfgs5", "ncg-fr", "ncg-pr", "ncg-hs", "ncg-dy", "ncg-hz")
COMPARE_HEADER = "method," + ",".join(f"it_{t:.0e}".replace("e-0", "e-") for t in THRESHOLDS) \
    + ",state_solves,adjoint_solves"


@dataclass(frozen=True)
class RunConfig:
    problem: str = "poisson"
    method: str = "ncg-dy"
    tol: float = 5e-4
    k_max: int = 50
    t0: float = 1.0
    sigma: float = 1e-4
    omega: float = 0.5
    lam: float = 1.429
    mu: str = "0.357"                # a number, or "laplace"
    delta: float = 0.2
    mu_max: float = 500.0
    mu_min: float = 1.0
    kcg: float = math.inf
    epscg: float = math.inf
    mesh_elems: int = 15000
    area_floor: float = 0.1
    out: str = "out"
    seed: int = 0
    fd_fields: int = 5
    fd_steps: str = "1e-3,1e-4,1e-5"
    fd_amplitude: float = 7.0
    fd_tol: float = 1e-4
    fd_order: float = 1.8
    measurements: str = ""           # EIT cache file; default <out>/eit_measurements.txt
    nu_vol: float = 1e4
    nu_bc: float = 1e2

    def validate(self) -> "RunConfig":
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}")
        Method.parse(self.method)
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")
        if self.k_max < 0:
            raise ValueError("k_max must be non-negative")
        if self.mesh_elems < 4:
            raise ValueError("mesh_elems too small")
        if self.mu != "laplace":
            float(self.mu)
        LineSearchParams(self.t0, self.sigma, self.omega, area_floor=self.area_floor)
        RestartPolicy(self.kcg, self.epscg)
        if self.fd_fields < 1:
            raise ValueError("fd_fields must be at least 1")
        self.steps()
        return self

    def steps(self) -> list[float]:
        vals = [float(s) for s in str(self.fd_steps).split(",") if s.strip()]
        if not vals or any(v <= 0 for v in vals):
            raise ValueError("fd_steps must be positive numbers")
        return vals


PROBLEM_DEFAULTS = {
    "poisson": dict(k_max=50, t0=1.0, lam=1.429, mu="0.357", delta=0.2, mesh_elems=15000),
    "eit": dict(k_max=50, t0=1.0, lam=0.0, mu="1.0", delta=0.0, mesh_elems=11870),
    "stokes": dict(k_max=250, t0=1.0, lam=0.0, mu="laplace", delta=0.0, mesh_elems=12326),
}

_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value: str):
    kind = _TYPES[key]
    if kind == "int":
        return int(float(value))
    if kind == "float":
        return float(value)
    return str(value)


def parse_config_text(text: str) -> dict:
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise ValueError(f"config line {n}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def config_to_text(cfg: RunConfig) -> str:
    return "".join(f"{k}={v}\n" for k, v in asdict(cfg).items())


def resolve_config(file_values: dict, overrides: dict) -> RunConfig:
    problem = overrides.get("problem") or file_values.get("problem") or RunConfig.problem
    merged = {**PROBLEM_DEFAULTS.get(problem, {}), **file_values, **overrides, "problem": problem}
    return RunConfig(**merged).validate()


# -- problem setup -------------------------------------------------------------
def elasticity_for(cfg: RunConfig, fixed_tags=(), mu_tags=((), ())) -> ElasticityParams:
    mu = "laplace" if cfg.mu == "laplace" else float(cfg.mu)
    return ElasticityParams(lam=cfg.lam, mu=mu, delta=cfg.delta, fixed_tags=tuple(fixed_tags),
                            mu_max=cfg.mu_max, mu_min=cfg.mu_min,
                            mu_max_tags=mu_tags[0], mu_min_tags=mu_tags[1])


def initial_mesh(cfg: RunConfig) -> TriMesh:
    if cfg.problem == "poisson":
        return generate_disk((0.0, 0.0), 1.0, cfg.mesh_elems)
    if cfg.problem == "eit":
        return generate_square_with_interface(("square", (0.5, 0.5), 0.4), cfg.mesh_elems)
    return generate_channel_with_obstacle(target_elems=cfg.mesh_elems)


def build_problem(cfg: RunConfig, mesh: TriMesh):
    if cfg.problem == "poisson":
        return PoissonProblem(elasticity=elasticity_for(cfg))
    if cfg.problem == "eit":
        from .problems.eit import SIDES
        cache = Path(cfg.measurements) if cfg.measurements else Path(cfg.out) / "eit_measurements.txt"
        meas = load_or_synthesize(cache, cfg.mesh_elems)
        return EITProblem(mesh, meas, elasticity=elasticity_for(cfg, SIDES))
    from .problems.stokes import FIXED, OBSTACLE
    return StokesObstacleProblem(mesh, nu_vol=cfg.nu_vol, nu_bc=cfg.nu_bc,
                                 elasticity=elasticity_for(cfg, FIXED, ((OBSTACLE,), FIXED)))


def _params(cfg: RunConfig):
    ls = LineSearchParams(cfg.t0, cfg.sigma, cfg.omega, area_floor=cfg.area_floor)
    return ls, RestartPolicy(cfg.kcg, cfg.epscg)


def _summary(method: str, hist: OptHistory, seconds: float) -> str:
    f = hist.final
    return (f"method={method} status={hist.status} iterations={f.k} cost={f.cost:.12e} "
            f"rel_grad_norm={f.rel_grad_norm:.6e} state_solves={hist.state_solves} "
            f"adjoint_solves={hist.adjoint_solves} seconds={seconds:.1f}")


def execute(cfg: RunConfig, mesh0: TriMesh, out: Path) -> OptHistory:
    """One optimization run; writes history, meshes and a summary into ``out``."""
    method = Method.parse(cfg.method)
    problem = build_problem(cfg, mesh0)
    ls, rp = _params(cfg)
    start = time.perf_counter()
    mesh, hist = run(problem, mesh0, method, ls, rp, cfg.tol, cfg.k_max)
    seconds = time.perf_counter() - start
    hist.write_csv(out / "history.csv")
    write_vtk(mesh0, out / "initial.vtk")
    write_vtk(mesh, out / "final.vtk")
    write_native(mesh, out / "final_mesh.txt")
    line = _summary(method.label, hist, seconds)
    if hist.message:
        line += f" message={hist.message!r}"
    atomic_write_text(out / "summary.txt", line + "\n")
    print(line)
    return hist


# -- commands ------------------------------------------------------------------
def cmd_run(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    atomic_write_text(out / "config.txt", config_to_text(cfg))
    mesh0 = initial_mesh(cfg)
    write_native(mesh0, out / "initial_mesh.txt")
    execute(cfg, read_native(out / "initial_mesh.txt"), out)
    return 0


def format_compare(rows: list[tuple[str, list, int | str, int | str]]) -> tuple[str, str]:
    csv = [COMPARE_HEADER]
    for label, its, ns, na in rows:
        cells = ["-" if i is None else str(i) for i in its]
        csv.append(",".join([label, *cells, str(ns), str(na)]))
    header = COMPARE_HEADER.split(",")
    table = [r.split(",") for r in csv]
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    text = "\n".join("  ".join(c.rjust(w) if j else c.ljust(w) for j, (c, w) in enumerate(zip(r, widths)))
                     for r in table)
    return "\n".join(csv) + "\n", text + "\n"


def cmd_compare(cfg: RunConfig, methods: list[str]) -> int:
    if not methods:
        raise ValueError("compare needs at least one method")
    out = Path(cfg.out)
    atomic_write_text(out / "config.txt", config_to_text(cfg))
    mesh_file = out / "initial_mesh.txt"
    write_native(initial_mesh(cfg), mesh_file)
    if cfg.problem == "eit":
        # synthesize once so every row reads the same cache
        build_problem(cfg, read_native(mesh_file))
    rows = []
    failed = 0
    for name in methods:
        label = Method.parse(name).label
        row_cfg = replace(cfg, method=name, out=str(out / label))
        try:
            hist = execute(row_cfg, read_native(mesh_file), out / label)
            rows.append((label, hist.threshold_row(), hist.state_solves, hist.adjoint_solves))
        except Exception as exc:     # one failing row must not abort the others
            failed += 1
            log.error("%s failed: %s", label, exc)
            print(f"method={label} status=Error message={exc!r}")
            rows.append((label, [None] * len(THRESHOLDS), "error", "error"))
    csv, text = format_compare(rows)
    atomic_write_text(out / "compare.csv", csv)
    atomic_write_text(out / "compare.txt", text)
    print(text, end="")
    return 1 if failed else 0


def derivative_report(cfg: RunConfig) -> tuple[str, bool]:
    mesh = initial_mesh(cfg)
    problem = build_problem(cfg, mesh)
    free = problem.free_nodes(mesh)
    rng = np.random.default_rng(cfg.seed)
    steps = cfg.steps()
    blocks, ok = [], True
    for i in range(cfg.fd_fields):
        v = random_smooth_field(mesh, rng, free=free, amplitude=cfg.fd_amplitude)
        rep = fd_check(problem, mesh, v, steps, cfg.area_floor)
        passed = rep.rows[-1].rel_error <= cfg.fd_tol and (
            not rep.orders or min(rep.orders) >= cfg.fd_order)
        ok &= passed
        blocks.append(f"# field {i} problem={cfg.problem} seed={cfg.seed} "
                      f"result={'PASS' if passed else 'FAIL'}\n{rep.format_table()}\n")
    blocks.append(f"# overall={'PASS' if ok else 'FAIL'} tol={cfg.fd_tol:g} min_order={cfg.fd_order:g}\n")
    return "\n".join(blocks), ok


def cmd_check_derivative(cfg: RunConfig) -> int:
    text, ok = derivative_report(cfg)
    atomic_write_text(Path(cfg.out) / "fd_report.txt", text)
    print(text, end="")
    return 0 if ok else 1


def mesh_summary(mesh: TriMesh) -> str:
    from .mesh import signed_areas
    a = signed_areas(mesh.nodes, mesh.triangles)
    lines = [f"nodes={mesh.n_nodes} triangles={mesh.n_triangles} area={mesh.total_area:.12g}",
             f"min_area={a.min():.6e} max_area={a.max():.6e} "
             f"min_edge={mesh.edge_lengths().min():.6e} max_edge={mesh.edge_lengths().max():.6e}"]
    for tag in mesh.tags:
        lines.append(f"tag {tag}: facets={len(mesh.facets_with(tag))}")
    if mesh.cell_tags is not None:
        names, counts = np.unique(mesh.cell_tags, return_counts=True)
        lines.append("cells " + " ".join(f"{n}={c}" for n, c in zip(names, counts)))
    return "\n".join(lines) + "\n"


def cmd_mesh_info(cfg: RunConfig, mesh_path: str | None) -> int:
    mesh = read_native(mesh_path) if mesh_path else initial_mesh(cfg)
    text = mesh_summary(mesh)
    if not mesh_path:
        out = Path(cfg.out)
        write_native(mesh, out / "initial_mesh.txt")
        write_vtk(mesh, out / "initial.vtk")
    print(text, end="")
    return 0


# -- argument parsing ----------------------------------------------------------
def _method_arg(text: str) -> str:
    try:
        Method.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def _methods_arg(text: str) -> list[str]:
    names = [s.strip() for s in text.split(",") if s.strip()]
    if not names:
        raise argparse.ArgumentTypeError("empty method list")
    for n in names:
        _method_arg(n)
    return names


def _float_or_inf(text: str) -> float:
    return math.inf if text.strip().lower() in ("inf", "infinity", "none") else float(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shapencg", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log every iteration")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--problem", choices=PROBLEMS)
    common.add_argument("--method", type=_method_arg)
    common.add_argument("--tol", type=float)
    common.add_argument("--k-max", dest="k_max", type=int)
    common.add_argument("--t0", type=float)
    common.add_argument("--sigma", type=float)
    common.add_argument("--omega", type=float)
    common.add_argument("--kcg", type=_float_or_inf)
    common.add_argument("--epscg", type=_float_or_inf)
    common.add_argument("--lam", type=float, help="first Lame parameter")
    common.add_argument("--mu", help="second Lame parameter, or 'laplace'")
    common.add_argument("--delta", type=float, help="damping parameter")
    common.add_argument("--mesh-elems", dest="mesh_elems", type=int)
    common.add_argument("--out")
    common.add_argument("--seed", type=int)

    sub.add_parser("run", parents=[common], help="one optimization run")
    c = sub.add_parser("compare", parents=[common], help="iterations-to-tolerance table over methods")
    c.add_argument("--methods", type=_methods_arg, default=list(ALL_METHODS))
    d = sub.add_parser("check-derivative", parents=[common], help="finite-difference check of dJ")
    d.add_argument("--fields", dest="fd_fields", type=int)
    d.add_argument("--steps", dest="fd_steps")
    d.add_argument("--amplitude", dest="fd_amplitude", type=float)
    m = sub.add_parser("mesh-info", parents=[common], help="describe a generated or stored mesh")
    m.add_argument("--mesh", help="native mesh file to describe instead of generating one")
    return p


_NON_CONFIG = {"command", "config", "verbose", "methods", "mesh"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG and v is not None}
    try:
        file_values = parse_config_text(Path(args.config).read_text()) if args.config else {}
        cfg = resolve_config(file_values, overrides)
    except (OSError, ValueError, TypeError) as exc:
        parser.error(str(exc))
    try:
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "compare":
            return cmd_compare(cfg, args.methods)
        if args.command == "check-derivative":
            return cmd_check_derivative(cfg)
        return cmd_mesh_info(cfg, args.mesh)
    except (MeshError, ValueError, RuntimeError, OSError) as exc:
        print(f"shapencg: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
