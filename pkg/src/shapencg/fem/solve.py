"""Constrained linear systems and sparse direct solves."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SolverError(RuntimeError):
    """Factorization breakdown or an unacceptable residual."""


@dataclass
class LinearSystem:
    """``A x = b`` with Dirichlet dofs and optional Lagrange-multiplier rows.

    Each multiplier row ``w`` adds the constraint ``w . x = 0`` and one extra
    unknown; the solution returned by :func:`solve` omits multipliers.
    """

    matrix: sp.spmatrix
    rhs: np.ndarray
    dirichlet_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    dirichlet_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    multipliers: tuple = ()

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def with_dirichlet(system: LinearSystem, dofs, values=0.0) -> LinearSystem:
    dofs = np.asarray(dofs, dtype=np.int64)
    vals = np.broadcast_to(np.asarray(values, dtype=float), dofs.shape).copy()
    all_dofs = np.concatenate([system.dirichlet_dofs, dofs])
    all_vals = np.concatenate([system.dirichlet_values, vals])
    uniq, idx = np.unique(all_dofs, return_index=True)
    return replace(system, dirichlet_dofs=uniq, dirichlet_values=all_vals[idx])


def apply_mean_zero_constraint(system: LinearSystem, weights: np.ndarray) -> LinearSystem:
    """Add a multiplier enforcing ``weights . x = 0``.

    For a boundary mean, ``weights`` is the boundary load of the constant 1,
    i.e. ``int_G phi_i ds`` (see ``assemble_boundary_load``).
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (system.n,):
        raise ValueError("constraint weights must have one entry per dof")
    if not np.any(w):
        raise ValueError("constraint weights are identically zero (tag not on mesh?)")
    return replace(system, multipliers=system.multipliers + (w,))


class Factorization:
    """Sparse LU of a constrained system, reusable for further right-hand sides.

    Dirichlet dofs are eliminated symmetrically (zero row and column, unit
    diagonal, right-hand side lifted).
    """

    def __init__(self, system: LinearSystem):
        self.system = system
        a = sp.csr_matrix(system.matrix, dtype=float)
        n = a.shape[0]
        dd = system.dirichlet_dofs
        keep = np.ones(n)
        keep[dd] = 0.0
        self._keep = keep
        k = sp.diags(keep)
        a_elim = (k @ a @ k + sp.diags(1.0 - keep)).tocsr()
        if system.multipliers:
            w = np.column_stack(system.multipliers) * keep[:, None]
            m = w.shape[1]
            a_elim = sp.bmat([[a_elim, sp.csr_matrix(w)],
                              [sp.csr_matrix(w.T), sp.csr_matrix((m, m))]], format="csr")
        self._a_full = a
        self.matrix = a_elim
        self.n = n
        try:
            self._lu = spla.splu(a_elim.tocsc())
        except RuntimeError as exc:
            raise SolverError(f"factorization failed for {n} dofs "
                              f"({len(dd)} Dirichlet, {len(system.multipliers)} multipliers): {exc}") from exc
        self._norm = float(abs(a_elim).sum(axis=1).max())

    def solve(self, rhs=None, dirichlet_values=None, return_multipliers=False):
        sysm = self.system
        b = np.asarray(sysm.rhs if rhs is None else rhs, dtype=float)
        g = sysm.dirichlet_values if dirichlet_values is None else np.asarray(dirichlet_values, dtype=float)
        dd = sysm.dirichlet_dofs
        lift = np.zeros(self.n)
        lift[dd] = g
        rhs_e = b - self._a_full @ lift
        rhs_e = rhs_e * self._keep
        rhs_e[dd] = g
        if sysm.multipliers:
            extra = -np.array([w @ lift for w in sysm.multipliers])
            rhs_e = np.concatenate([rhs_e, extra])
        x = self._lu.solve(rhs_e)
        if not np.all(np.isfinite(x)):
            raise SolverError(f"non-finite solution ({self.n} dofs); system is singular")
        # one step of iterative refinement brings the error down to roundoff in the residual
        r = rhs_e - self.matrix @ x
        x = x + self._lu.solve(r)
        res = np.abs(self.matrix @ x - rhs_e).max()
        bound = 1e-10 * (np.abs(rhs_e).max() + self._norm * np.abs(x).max())
        if res > bound:
            raise SolverError(f"residual {res:.3e} exceeds {bound:.3e} ({self.n} dofs); "
                              "system is singular or ill-conditioned")
        if return_multipliers:
            return x[:self.n], x[self.n:]
        return x[:self.n]


def solve(system: LinearSystem) -> np.ndarray:
    return Factorization(system).solve()
