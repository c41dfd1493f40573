"""Acceptance criteria, each checked at its stated tolerance.

Every test records one PASS/FAIL line, repeated in the terminal summary.
The benchmark runs are shared between criteria through module fixtures.
"""
import math
import time

import numpy as np
import pytest

from shapencg import cli
from shapencg.fem import FunctionSpace, LinearSystem, assemble_load, assemble_poisson, solve, with_dirichlet
from shapencg.mesh import NodalField, deform, generate_channel_with_obstacle, generate_disk, generate_square_with_interface, transport
from shapencg.optimize import Method, ncg_beta, run
from shapencg.problems import EITProblem, PoissonProblem, StokesObstacleProblem, load_or_synthesize
from shapencg.problems.eit import INITIAL_SQUARE, REFERENCE_CIRCLE

from checks import history_violations
from conftest import record_criterion

pytestmark = pytest.mark.slow
NCG = ("FR", "PR", "HS", "DY", "HZ")


def timed_run(problem, mesh, method, k_max):
    start = time.perf_counter()
    mesh_out, hist = run(problem, mesh, Method.parse(method), k_max=k_max)
    return dict(mesh=mesh_out, hist=hist, seconds=time.perf_counter() - start, problem=problem)


def fmt(row):
    return " ".join("-" if i is None else str(i) for i in row)


# -- benchmark runs ----------------------------------------------------------------
@pytest.fixture(scope="module")
def poisson_runs():
    mesh = generate_disk((0.0, 0.0), 1.0, 15000)
    pb = PoissonProblem()
    return {m: timed_run(pb, mesh, m, 50) for m in ("gd",) + tuple(f"ncg-{v.lower()}" for v in NCG)}


@pytest.fixture(scope="module")
def eit_runs(tmp_path_factory):
    cache = tmp_path_factory.mktemp("eit") / "eit_measurements.txt"
    meas = load_or_synthesize(cache, 11870)
    mesh = generate_square_with_interface(("square", *INITIAL_SQUARE), 11870)
    pb = EITProblem(mesh, meas)
    return {m: timed_run(pb, mesh, m, 50) for m in ("gd", "ncg-hs", "ncg-hz", "lbfgs5")}


@pytest.fixture(scope="module")
def stokes_runs():
    mesh = generate_channel_with_obstacle(target_elems=12326)
    pb = StokesObstacleProblem(mesh)
    return {m: timed_run(pb, mesh, m, 250) for m in ("ncg-dy", "gd")}


# -- criterion 1 -------------------------------------------------------------------
def test_criterion_1_fd_oracle(tmp_path):
    ok, parts = True, []
    for problem in cli.PROBLEMS:
        cfg = cli.resolve_config({}, {"problem": problem, "mesh_elems": 10000, "fd_fields": 5,
                                      "seed": 0, "out": str(tmp_path / problem)})
        start = time.perf_counter()
        text, passed = cli.derivative_report(cfg)
        secs = time.perf_counter() - start
        errs = [float(ln.split()[3]) for ln in text.splitlines() if ln.strip().startswith("1.0e-05")]
        orders = [float(ln.split()[4]) for ln in text.splitlines()
                  if ln.strip().startswith(("1.0e-04", "1.0e-05"))]
        good = passed and len(errs) == 5 and secs <= 120
        ok &= good
        parts.append(f"{problem}: max rel err {max(errs):.1e}, min order {min(orders):.2f}, {secs:.0f}s")
    record_criterion(1, ok, "; ".join(parts))
    assert ok


# -- criterion 2 -------------------------------------------------------------------
def test_criterion_2_poisson(poisson_runs):
    gd = poisson_runs["gd"]["hist"]
    dy = poisson_runs["ncg-dy"]["hist"]
    gd_1e2 = gd.iterations_to(1e-2)
    a = gd.iterations_to(1e-3) is None
    dy_it = dy.iterations_to(5e-4)
    b = dy.status == "Converged" and dy_it is not None and 13 <= dy_it <= 39
    c = gd_1e2 is not None and all(
        (poisson_runs[f"ncg-{v.lower()}"]["hist"].iterations_to(1e-2) or math.inf) < gd_1e2 for v in NCG)
    if gd_1e2 is None:
        c = all(poisson_runs[f"ncg-{v.lower()}"]["hist"].iterations_to(1e-2) is not None for v in NCG)
    secs = sum(r["seconds"] for r in poisson_runs.values())
    ok = a and b and c and secs <= 300
    rows = "; ".join(f"{k.upper()} [{fmt(r['hist'].threshold_row())}]" for k, r in poisson_runs.items())
    record_criterion(2, ok, f"(a) GD misses 1e-3: {a}; (b) DY to 5e-4 at {dy_it}: {b}; "
                            f"(c) NCG beat GD to 1e-2: {c}; {secs:.0f}s; {rows}")
    assert ok


# -- criterion 3 -------------------------------------------------------------------
def test_criterion_3_eit(eit_runs):
    parts, ok = [], True
    for m in ("ncg-hs", "ncg-hz"):
        r = eit_runs[m]
        h = r["hist"]
        drop = math.log10(h.records[0].cost / h.final.cost)
        radii = r["problem"].interface_radii(r["mesh"])
        dev = float(np.abs(radii - REFERENCE_CIRCLE[1]).max())
        good = drop >= 4 and dev <= 0.02
        ok &= good
        parts.append(f"{m.upper()} {h.status} k={h.final.k} cost drop {drop:.2f} orders, "
                     f"max |r-0.2| {dev:.4f}")
    ref = eit_runs["lbfgs5"]
    ref_dev = float(np.abs(ref["problem"].interface_radii(ref["mesh"]) - REFERENCE_CIRCLE[1]).max())
    parts.append(f"LBFGS5 reference max |r-0.2| {ref_dev:.4f}")
    gd = eit_runs["gd"]["hist"]
    gd_ok = gd.iterations_to(1e-2) is None
    ok &= gd_ok
    parts.append(f"GD [{fmt(gd.threshold_row())}]")
    record_criterion(3, ok, "; ".join(parts))
    assert ok


# -- criterion 4 -------------------------------------------------------------------
def test_criterion_4_stokes(stokes_runs):
    dy = stokes_runs["ncg-dy"]
    h = dy["hist"]
    it = h.iterations_to(5e-3)
    pb = dy["problem"]
    vol, _ = pb.geometry(dy["mesh"])
    dvol = abs(vol - pb.vol0) / pb.vol0
    gd = stokes_runs["gd"]["hist"]
    a = it is not None and 28 <= it <= 86
    b = gd.iterations_to(1e-1) is None
    c = dvol <= 1e-3
    d = dy["seconds"] <= 1200
    ok = a and b and c and d
    record_criterion(4, ok, f"DY {h.status} k={h.final.k} [{fmt(h.threshold_row())}] "
                            f"5e-3 at {it}: {a}; GD [{fmt(gd.threshold_row())}] misses 1e-1: {b}; "
                            f"|dvol|/vol0 = {dvol:.2e}: {c}; DY {dy['seconds']:.0f}s: {d}; "
                            f"DY message: {h.message or '-'}")
    assert ok


# -- criterion 5 -------------------------------------------------------------------
def _dense_beta_ok(trials=500):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 7))
        r = rng.normal(size=(n, n))
        a = r @ r.T + n * np.eye(n)

        class Ip:
            def inner(self, v, w):
                return float(v @ a @ w)

        g, gp, dp = rng.normal(size=(3, n))
        y = g - gp
        want = {"FR": (g @ a @ g) / (gp @ a @ gp), "PR": (g @ a @ y) / (gp @ a @ gp),
                "HS": (g @ a @ y) / (dp @ a @ y), "DY": (g @ a @ g) / (dp @ a @ y),
                "HZ": ((y - 2 * dp * (y @ a @ y) / (dp @ a @ y)) @ a @ g) / (dp @ a @ y)}
        for v, w in want.items():
            got = ncg_beta(v, g, gp, dp, Ip()).beta
            worst = max(worst, abs(got - w) / max(1.0, abs(w)))
    return worst


def test_criterion_5_properties(poisson_runs, eit_runs, stokes_runs):
    bad, n_steps = [], 0
    for name, runs in (("poisson", poisson_runs), ("eit", eit_runs), ("stokes", stokes_runs)):
        for m, r in runs.items():
            n_steps += len(r["hist"].records) - 1
            bad += [f"{name}/{m}: {v}" for v in history_violations(r["hist"])]
    worst = _dense_beta_ok()
    mesh = generate_disk((0.0, 0.0), 1.0, 500)
    v = np.random.default_rng(1).normal(scale=1e-3, size=(mesh.n_nodes, 2))
    moved = deform(mesh, NodalField.on(mesh, v))
    f = NodalField.on(mesh, v * 7.0)
    exact_deform = np.array_equal(moved.nodes, mesh.nodes + v)
    bitwise = transport(f, mesh, moved).values.tobytes() == f.values.tobytes()
    ok = not bad and worst <= 1e-12 and exact_deform and bitwise
    record_criterion(5, ok, f"{n_steps} accepted steps checked, {len(bad)} violations"
                            f"{(': ' + bad[0]) if bad else ''}; beta oracle max rel diff {worst:.1e}; "
                            f"deform exact: {exact_deform}; transport bitwise: {bitwise}")
    assert ok


# -- criterion 6 -------------------------------------------------------------------
def test_criterion_6_fem():
    from test_fem import _disk_errors, test_poiseuille_profile
    h1, e1, _ = _disk_errors(1000)
    h2, e2, _ = _disk_errors(4000)
    h3, e3, j = _disk_errors(15000)
    order = min(math.log(e1 / e2) / math.log(h1 / h2), math.log(e2 / e3) / math.log(h2 / h3))
    rel = abs(j - math.pi / 8) / (math.pi / 8)
    try:
        test_poiseuille_profile()
        pois = True
    except AssertionError:
        pois = False
    ok = rel <= 1e-2 and order >= 1.9 and pois
    record_criterion(6, ok, f"int u = {j:.6f} vs pi/8 rel err {rel:.1e}; L2 order {order:.2f}; "
                            f"Poiseuille within 2%: {pois}")
    assert ok
