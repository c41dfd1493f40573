"""Armijo backtracking on deformed copies of the mesh."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mesh import NodalField, TriMesh, admissibility, deform
from .config import LineSearchParams, Method


class LineSearchFailed(RuntimeError):
    pass


@dataclass
class ArmijoResult:
    step: float
    mesh: TriMesh
    state: object
    cost: float
    state_solves: int
    trials: int
    rejected_meshes: int


def armijo_accepts(cost_new: float, cost: float, step: float, slope: float, sigma: float) -> bool:
    """Sufficient decrease ``J_new <= J + sigma t a(G, D)``, and a strict decrease."""
    return bool(np.isfinite(cost_new) and cost_new <= cost + sigma * step * slope and cost_new < cost)


def armijo(problem, mesh: TriMesh, direction: NodalField, cost: float, slope: float,
           ls: LineSearchParams, t: float) -> ArmijoResult:
    """Backtrack from ``t`` until the trial mesh is admissible and decreases ``J`` enough.

    Inadmissible trial meshes are rejected without a state solve.
    """
    if not slope < 0:
        raise ValueError("Armijo search needs a descent direction")
    solves = trials = rejected = 0
    while t >= ls.min_step:
        trials += 1
        trial = deform(mesh, direction * t)
        if not admissibility(mesh, trial, ls.area_floor).admissible:
            rejected += 1
            t *= ls.omega
            continue
        state = problem.solve_state(trial)
        solves += 1
        j = problem.cost(trial, state)
        if armijo_accepts(j, cost, t, slope, ls.sigma):
            return ArmijoResult(t, trial, state, j, solves, trials, rejected)
        t *= ls.omega
    err = LineSearchFailed(f"step size fell below {ls.min_step:.3e} after {trials} trials")
    err.state_solves = solves
    raise err


def initial_trial_step(method: Method, memory_size: int, previous_step: float | None,
                       omega: float, t0: float) -> float:
    """``1`` for L-BFGS with stored pairs, ``t0`` at the start, else the last step over omega."""
    if method.kind == "LBFGS" and memory_size > 0:
        return 1.0
    if previous_step is None:
        return t0
    return previous_step / omega
