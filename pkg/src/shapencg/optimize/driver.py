"""The descent loop: gradient deformation, direction, Armijo step, mesh update."""
from __future__ import annotations

import logging
import math

import numpy as np

from ..fem import SolverError
from ..mesh import NodalField, TriMesh
from ..shape_core import ZERO_NORM_SQ, compute_gradient_deformation
from .config import LineSearchParams, Method, RestartPolicy
from .directions import LbfgsMemory, direction_gd, direction_lbfgs, direction_ncg
from .history import IterationRecord, OptHistory
from .linesearch import LineSearchFailed, armijo, initial_trial_step

log = logging.getLogger(__name__)


def run(problem, mesh0: TriMesh, method: Method, ls: LineSearchParams | None = None,
        rp: RestartPolicy | None = None, tol: float = 5e-4, k_max: int = 50,
        callback=None) -> tuple[TriMesh, OptHistory]:
    """Minimize ``problem`` starting from ``mesh0``.

    Stops when ``|G_k|_a <= tol |G_0|_a`` (Converged), after the gradient at
    ``k = k_max`` has been evaluated (MaxIterations), or when the step size
    underflows (LineSearchFailed).  The state of the accepted trial mesh is
    reused at the next iterate.  ``callback(k, mesh, record)`` is called
    after each record is complete.
    """
    ls = ls or LineSearchParams()
    rp = rp or RestartPolicy()
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    hist = OptHistory(method.label)
    memory = LbfgsMemory(method.memory) if method.kind == "LBFGS" else None
    mesh = mesh0
    n_state = n_adj = 0
    try:
        state = problem.solve_state(mesh)
        n_state += 1
        cost = problem.cost(mesh, state)
    except SolverError as exc:
        hist.status, hist.message = "SolverFailure", str(exc)
        return mesh, hist

    g0 = None
    prev = None          # (d, g, xi) arrays of the previous iterate
    t_prev = None
    k = 0
    while True:
        try:
            adjoint = problem.solve_adjoint(mesh, state)
            n_adj += 1
            dj = problem.shape_derivative(mesh, state, adjoint)
            ip = problem.inner_product(mesh)
            grad = compute_gradient_deformation(dj, ip)
        except SolverError as exc:
            hist.status, hist.message = "SolverFailure", str(exc)
            break
        if g0 is None:
            g0 = grad.a_norm
        rel = grad.a_norm / g0 if g0 > 0 else 0.0
        rec = IterationRecord(k, cost, rel, state_solves=n_state, adjoint_solves=n_adj,
                              grad_norm_sq=grad.a_norm_sq)
        hist.records.append(rec)
        if g0 ** 2 <= ZERO_NORM_SQ or rel <= tol:
            hist.status = "Converged"
            _notify(callback, k, mesh, rec)
            break
        if k >= k_max:
            hist.status = "MaxIterations"
            _notify(callback, k, mesh, rec)
            break

        g = grad.field.values
        if method.kind == "GD":
            d = direction_gd(g)
        elif method.kind == "LBFGS":
            if prev is not None:
                # s = xi_{k-1}, y = G_k - G_{k-1}, both carried over verbatim
                rec.curvature = ip.inner(prev[2], g - prev[1])
                rec.memory_reset = not memory.push(prev[2], g - prev[1], ip)
            d = direction_lbfgs(g, memory, ip)
        else:
            step = direction_ncg(g, None if prev is None else prev[:2], method.variant, ip, rp, k)
            d = step.direction
            rec.beta, rec.restarted, rec.guarded = step.beta, step.restarted, step.guarded
        rec.memory_size = len(memory) if memory is not None else 0
        slope = dj.pair(d)
        rec.candidate_slope = slope
        if not slope < 0:
            d = -g
            slope = dj.pair(d)
            rec.descent_reset = True
            if memory is not None:
                memory.clear()
        rec.slope = slope
        t = initial_trial_step(method, len(memory) if memory is not None else 0, t_prev, ls.omega, ls.t0)
        direction = NodalField.on(mesh, d)
        try:
            res = armijo(problem, mesh, direction, cost, slope, ls, t)
        except LineSearchFailed as exc:
            n_state += exc.state_solves
            rec.state_solves = n_state
            hist.status, hist.message = "LineSearchFailed", str(exc)
            _notify(callback, k, mesh, rec)
            break
        except SolverError as exc:
            hist.status, hist.message = "SolverFailure", str(exc)
            break
        n_state += res.state_solves
        rec.step, rec.trials, rec.rejected_meshes = res.step, res.trials, res.rejected_meshes
        rec.next_cost = res.cost
        _notify(callback, k, mesh, rec)
        log.info("k=%d J=%.10e rel=%.3e t=%.3e", k, cost, rel, res.step)
        prev = (d, g, res.step * d)
        t_prev = res.step
        mesh, state, cost = res.mesh, res.state, res.cost
        k += 1
    return mesh, hist


def _notify(callback, k, mesh, rec):
    if callback is not None:
        callback(k, mesh, rec)


