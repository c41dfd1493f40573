import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shapencg.fem import SolverError
from shapencg.optimize import (EUCLIDEAN, LbfgsMemory, LineSearchParams, Method, RestartPolicy,
                               THRESHOLDS, armijo_accepts, direction_lbfgs, direction_ncg,
                               initial_trial_step, ncg_beta, read_history_csv, run)
from shapencg.optimize import driver as driver_mod
from shapencg.problems import PoissonProblem

from checks import history_violations


class Dense:
    """``a(v, w) = v^T A w`` on flat arrays."""

    def __init__(self, a):
        self.a = a

    def inner(self, v, w):
        return float(np.ravel(v) @ self.a @ np.ravel(w))


def spd(n, seed):
    r = np.random.default_rng(seed).normal(size=(n, n))
    return r @ r.T + n * np.eye(n)


vec6 = st.lists(st.floats(-10, 10, allow_nan=False, allow_infinity=False), min_size=6, max_size=6)


# -- configuration ---------------------------------------------------------------
@pytest.mark.parametrize("text,label", [("gd", "GD"), ("LBFGS3", "LBFGS3"), ("lbfgs:5", "LBFGS5"),
                                        ("ncg-dy", "NCG-DY"), ("cg_hz", "NCG-HZ"), ("PR", "NCG-PR")])
def test_method_parse(text, label):
    assert Method.parse(text).label == label


@pytest.mark.parametrize("bad", ["", "newton", "lbfgs0", "ncg-xx", "lbfgs"])
def test_method_parse_rejects(bad):
    with pytest.raises(ValueError):
        Method.parse(bad)


def test_param_ranges():
    for kw in (dict(t0=0), dict(sigma=1.0), dict(omega=0.0), dict(t0=1.0, t_min=2.0)):
        with pytest.raises(ValueError):
            LineSearchParams(**kw)
    assert LineSearchParams(t0=2.0).min_step == pytest.approx(2e-12)
    with pytest.raises(ValueError):
        RestartPolicy(k_cg=0)
    with pytest.raises(ValueError):
        RestartPolicy(eps_cg=-1)
    rp = RestartPolicy(k_cg=3, eps_cg=0.2)
    assert rp.periodic(6) and not rp.periodic(7)
    assert rp.orthogonality_lost(0.2) and not rp.orthogonality_lost(0.1)
    assert not RestartPolicy().periodic(10)


def test_initial_trial_step():
    lb, cg = Method.parse("lbfgs3"), Method.parse("dy")
    assert initial_trial_step(lb, 2, 0.125, 0.5, 1.0) == 1.0
    assert initial_trial_step(lb, 0, 0.125, 0.5, 1.0) == 0.25
    assert initial_trial_step(cg, 0, None, 0.5, 3.0) == 3.0
    assert initial_trial_step(cg, 0, 0.125, 0.5, 1.0) == 0.25


def test_armijo_accepts():
    assert armijo_accepts(0.9, 1.0, 1.0, -1.0, 1e-4)
    assert not armijo_accepts(1.0, 1.0, 1.0, 0.0, 1e-4)       # no strict decrease
    assert not armijo_accepts(0.99999, 1.0, 1.0, -1.0, 0.5)
    assert not armijo_accepts(math.nan, 1.0, 1.0, -1.0, 1e-4)


# -- NCG beta against a dense oracle ----------------------------------------------
def beta_oracle(variant, g, gp, dp, a):
    y = g - gp
    if variant == "FR":
        return (g @ a @ g) / (gp @ a @ gp)
    if variant == "PR":
        return (g @ a @ y) / (gp @ a @ gp)
    if variant == "HS":
        return (g @ a @ y) / (dp @ a @ y)
    if variant == "DY":
        return (g @ a @ g) / (dp @ a @ y)
    dy = dp @ a @ y
    return ((y - 2 * dp * (y @ a @ y) / dy) @ a @ g) / dy


@settings(max_examples=200, deadline=None)
@given(vec6, vec6, vec6, st.integers(0, 5), st.sampled_from(["FR", "PR", "HS", "DY", "HZ"]),
       st.integers(1, 6))
def test_ncg_beta_matches_dense_oracle(g, gp, dp, seed, variant, n):
    g, gp, dp = (np.array(v[:n]) for v in (g, gp, dp))
    a = spd(n, seed)
    res = ncg_beta(variant, g, gp, dp, Dense(a))
    y = g - gp
    den = (gp @ a @ gp) if variant in ("FR", "PR") else (dp @ a @ y)
    scale = (max(g @ a @ g, gp @ a @ gp) if variant in ("FR", "PR")
             else math.sqrt((dp @ a @ dp) * (y @ a @ y)))
    if abs(den) <= 1e-30 * scale or den == 0:
        assert res.beta == 0.0 and res.guarded
        return
    if abs(den) < 1e-8 * max(scale, 1e-300):
        return      # near-degenerate: both sides dominated by cancellation
    want = beta_oracle(variant, g, gp, dp, a)
    assert res.beta == pytest.approx(want, rel=1e-12, abs=1e-12 * max(1.0, abs(want)))


def test_beta_guard_on_zero_denominator():
    g = np.array([1.0, 0.0])
    res = ncg_beta("DY", g, g, np.array([0.0, 1.0]), EUCLIDEAN)
    assert res.beta == 0.0 and res.guarded
    res = ncg_beta("FR", g, np.zeros(2), np.zeros(2), EUCLIDEAN)
    assert res.beta == 0.0 and res.guarded


def test_direction_ncg_restarts():
    g, gp, dp = np.array([1.0, 2.0]), np.array([2.0, 1.0]), np.array([-2.0, -1.0])
    s = direction_ncg(g, None, "FR", EUCLIDEAN, RestartPolicy(), 0)
    assert s.restarted and np.array_equal(s.direction, -g)
    s = direction_ncg(g, (dp, gp), "FR", EUCLIDEAN, RestartPolicy(k_cg=2), 4)
    assert s.restarted and s.beta == 0.0
    # a(g, gp)/|g|^2 = 4/5 >= eps
    s = direction_ncg(g, (dp, gp), "FR", EUCLIDEAN, RestartPolicy(eps_cg=0.5), 3)
    assert s.restarted
    s = direction_ncg(g, (dp, gp), "FR", EUCLIDEAN, RestartPolicy(), 3)
    assert not s.restarted and s.beta == pytest.approx(1.0)
    assert np.allclose(s.direction, -g + dp)


# -- L-BFGS ----------------------------------------------------------------------
def dense_bfgs(g, pairs, a):
    """Inverse-Hessian recursion in the a-inner product, written out densely.

    ``H <- (I - rho s y^T A) H (I - rho y s^T A) + rho s s^T A``, oldest pair first.
    """
    n = len(g)
    s_last, y_last = pairs[-1]
    h = (s_last @ a @ y_last) / (y_last @ a @ y_last) * np.eye(n)
    for s, y in pairs:
        rho = 1.0 / (s @ a @ y)
        h = ((np.eye(n) - rho * np.outer(s, y @ a)) @ h @ (np.eye(n) - rho * np.outer(y, s @ a))
             + rho * np.outer(s, s @ a))
    return -h @ g


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(0, 1000), st.integers(2, 6))
def test_lbfgs_two_loop_matches_dense_recursion(m, seed, n):
    rng = np.random.default_rng(seed)
    a = spd(n, seed % 7)
    ip = Dense(a)
    mem = LbfgsMemory(m)
    pairs = []
    for _ in range(m + 2):
        s = rng.normal(size=n)
        y = s + 0.3 * rng.normal(size=n)
        if mem.push(s, y, ip):
            pairs.append((s, y))
        else:
            pairs.clear()
    pairs = pairs[-m:]
    g = rng.normal(size=n)
    d = direction_lbfgs(g, mem, ip)
    if not pairs:
        assert np.array_equal(d, -g)
        return
    assert np.allclose(d, dense_bfgs(g, pairs, a), rtol=1e-9, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(vec6, vec6), min_size=1, max_size=10), st.integers(1, 5))
def test_lbfgs_memory_stores_only_curvature_pairs(pairs, m):
    ip = Dense(spd(6, 1))
    mem = LbfgsMemory(m)
    for s, y in pairs:
        ok = mem.push(np.array(s), np.array(y), ip)
        assert ok == (ip.inner(s, y) > 0)
        assert len(mem) <= m
        for ss, yy, rho in mem.pairs:
            assert ip.inner(ss, yy) > 0 and rho == 1.0 / ip.inner(ss, yy)


def test_lbfgs_secant_condition():
    # with one pair the update satisfies H y = s (direction for g = y is -s)
    ip = Dense(spd(4, 2))
    mem = LbfgsMemory(1)
    s, y = np.array([1.0, 0.2, 0.0, -0.5]), np.array([0.8, 0.1, 0.3, -0.2])
    assert mem.push(s, y, ip)
    assert np.allclose(direction_lbfgs(y, mem, ip), -s)


# -- driver ---------------------------------------------------------------------
@pytest.fixture(scope="module")
def poisson():
    return PoissonProblem()


ALL = ["gd", "lbfgs1", "lbfgs3", "ncg-fr", "ncg-pr", "ncg-hs", "ncg-dy", "ncg-hz"]


@pytest.fixture(scope="module")
def runs(poisson, disk_small):
    return {m: run(poisson, disk_small, Method.parse(m), k_max=8) for m in ALL}


@pytest.mark.parametrize("name", ALL)
def test_run_invariants(runs, name):
    _, h = runs[name]
    sigma = LineSearchParams().sigma
    recs = h.records
    assert h.status in ("Converged", "MaxIterations")
    assert history_violations(h, sigma) == []
    for prev, nxt in zip(recs, recs[1:]):
        assert prev.slope < 0
        assert prev.next_cost <= prev.cost + sigma * prev.step * prev.slope
        assert nxt.cost == prev.next_cost < prev.cost
        assert nxt.adjoint_solves == prev.adjoint_solves + 1
        assert nxt.state_solves == prev.state_solves + prev.trials - prev.rejected_meshes
    assert recs[0].state_solves == 1 and recs[0].adjoint_solves == 1
    assert recs[0].rel_grad_norm == 1.0
    assert math.isnan(recs[-1].step)
    if name.startswith("lbfgs"):
        m = int(name[-1])
        assert all(r.memory_size <= m for r in recs)


def test_k_max_zero(poisson, disk_small):
    mesh, h = run(poisson, disk_small, Method.parse("dy"), k_max=0)
    assert h.status == "MaxIterations" and len(h.records) == 1
    assert (h.state_solves, h.adjoint_solves) == (1, 1)
    assert mesh is disk_small


def test_determinism(poisson, disk_small):
    a = run(poisson, disk_small, Method.parse("hs"), k_max=5)[1].to_csv()
    b = run(poisson, disk_small, Method.parse("hs"), k_max=5)[1].to_csv()
    assert a == b


def test_history_csv_roundtrip(tmp_path, runs):
    _, h = runs["ncg-dy"]
    h.write_csv(tmp_path / "h.csv")
    rows, status = read_history_csv(tmp_path / "h.csv")
    assert status == h.status and len(rows) == len(h.records)
    for row, rec in zip(rows, h.records):
        assert row["cost"] == rec.cost and row["rel_grad_norm"] == rec.rel_grad_norm
    assert len(h.threshold_row()) == len(THRESHOLDS)


def test_descent_reset_when_direction_is_ascent(poisson, disk_small, monkeypatch):
    real = driver_mod.direction_ncg

    def ascent(g, prev, variant, ip, rp, k):
        step = real(g, prev, variant, ip, rp, k)
        if k >= 1:
            step.direction = np.asarray(g, dtype=float).copy()
        return step

    monkeypatch.setattr(driver_mod, "direction_ncg", ascent)
    _, h = run(poisson, disk_small, Method.parse("dy"), k_max=4)
    for r in h.records[1:-1]:
        assert r.descent_reset and r.slope < 0 and r.candidate_slope > 0
    assert history_violations(h) == []
    assert not h.records[0].descent_reset


class Wrong(PoissonProblem):
    """Derivative with the wrong sign: no step can satisfy Armijo."""

    def shape_derivative(self, mesh, state, adjoint):
        d = super().shape_derivative(mesh, state, adjoint)
        return self.derivative(mesh, -d.values)


def test_line_search_failure(disk_small):
    _, h = run(Wrong(), disk_small, Method.parse("gd"), LineSearchParams(t_min=1e-4), k_max=5)
    assert h.status == "LineSearchFailed"
    assert len(h.records) == 1
    # every trial was admissible, so each one cost a state solve
    assert h.state_solves >= 2 and h.adjoint_solves == 1


class Flaky(PoissonProblem):
    def __init__(self, fail_after):
        super().__init__()
        self.calls, self.fail_after = 0, fail_after

    def solve_state(self, mesh):
        self.calls += 1
        if self.calls > self.fail_after:
            raise SolverError("singular")
        return super().solve_state(mesh)


def test_solver_failure_status(disk_small):
    _, h = run(Flaky(0), disk_small, Method.parse("gd"))
    assert h.status == "SolverFailure" and not h.records
    _, h = run(Flaky(2), disk_small, Method.parse("gd"))
    assert h.status == "SolverFailure" and "singular" in h.message


class Flat(PoissonProblem):
    def shape_derivative(self, mesh, state, adjoint):
        return self.derivative(mesh, np.zeros((mesh.n_nodes, 2)))


def test_stationary_start_converges_immediately(disk_small):
    _, h = run(Flat(), disk_small, Method.parse("lbfgs3"))
    assert h.status == "Converged" and len(h.records) == 1


def test_run_argument_checks(poisson, disk_small):
    with pytest.raises(ValueError):
        run(poisson, disk_small, Method.parse("gd"), tol=0.0)
    with pytest.raises(ValueError):
        run(poisson, disk_small, Method.parse("gd"), k_max=-1)
