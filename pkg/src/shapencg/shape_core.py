"""Steklov-Poincare-type metric through the elasticity bilinear form.

The metric on boundary perturbations is never assembled.  Everything goes
through ``a_Omega`` on the current mesh: the gradient deformation G solves
``a(G, V) = dJ[V]`` for all admissible V, and then ``a(G, V) = dJ[V]`` and
``||G||_a^2 = dJ[G]`` give every scalar product the optimizers need.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fem import (Factorization, FunctionSpace, LinearSystem, TRI_POINTS, TRI_WEIGHTS,
                  assemble_elasticity, assemble_poisson, barycentric_gradients, scatter_vector,
                  solve, with_dirichlet)
from .mesh import MeshError, NodalField, TriMesh, admissibility, deform

ZERO_NORM_SQ = 1e-30


@dataclass(frozen=True, eq=False)
class ShapeDerivative:
    """Dual vector ``dJ[phi_{i,c}]`` over the P1 deformation basis, ``(N, 2)``.

    ``free`` marks the nodes that may move; the pairing ignores the rest.
    """

    values: np.ndarray
    mesh_id: int
    free: np.ndarray

    def masked(self) -> np.ndarray:
        return self.values * self.free[:, None]

    def pair(self, v) -> float:
        """``dJ[V]`` for a nodal deformation field ``V`` (fixed nodes ignored)."""
        if isinstance(v, NodalField):
            if v.mesh_id != self.mesh_id:
                raise MeshError("field and derivative live on different meshes")
            v = v.values
        return float(np.sum(self.masked() * v))


@dataclass(frozen=True)
class ElasticityParams:
    lam: float = 0.0
    mu: float | str = 1.0          # constant, or "laplace" for the harmonic mu field
    delta: float = 0.0
    fixed_tags: tuple[str, ...] = ()
    mu_max: float = 500.0
    mu_min: float = 1.0
    mu_max_tags: tuple[str, ...] = ()
    mu_min_tags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta_elas must be non-negative")
        if self.delta == 0 and not self.fixed_tags:
            raise ValueError("a_Omega is not coercive: delta_elas = 0 needs fixed boundary tags")


@dataclass(eq=False)
class InnerProductOperator:
    """Assembled ``a_Omega`` on one mesh, restricted to fields vanishing on fixed tags."""

    mesh: TriMesh
    params: ElasticityParams
    matrix: object = field(repr=False)
    free: np.ndarray = field(repr=False)
    mu_nodes: np.ndarray | None = field(default=None, repr=False)
    _factor: Factorization | None = field(default=None, repr=False)

    @classmethod
    def build(cls, mesh: TriMesh, params: ElasticityParams) -> "InnerProductOperator":
        if params.mu == "laplace":
            mu = solve_mu_field(mesh, params.mu_max, params.mu_min,
                                params.mu_max_tags, params.mu_min_tags)
        else:
            mu = float(params.mu)
        space = FunctionSpace(mesh, "P1v")
        a = assemble_elasticity(space, params.lam, mu, params.delta)
        free = np.ones(mesh.n_nodes, dtype=bool)
        free[mesh.tag_nodes(params.fixed_tags)] = False
        return cls(mesh, params, a, free, None if np.isscalar(mu) else mu)

    def _vec(self, v) -> np.ndarray:
        if isinstance(v, NodalField):
            v.check(self.mesh)
            v = v.values
        v = np.asarray(v, dtype=float)
        if v.shape != (self.mesh.n_nodes, 2):
            raise MeshError("expected a 2-vector nodal field on this mesh")
        return (v * self.free[:, None]).ravel()

    def apply(self, v) -> np.ndarray:
        return (self.matrix @ self._vec(v)).reshape(-1, 2)

    def inner(self, v, w) -> float:
        return float(self._vec(v) @ (self.matrix @ self._vec(w)))

    def norm_sq(self, v) -> float:
        return self.inner(v, v)

    @property
    def fixed_dofs(self) -> np.ndarray:
        nodes = np.flatnonzero(~self.free)
        return np.sort(np.concatenate([2 * nodes, 2 * nodes + 1]))

    def riesz(self, dual: np.ndarray) -> np.ndarray:
        """Solve ``a(G, phi) = dual[phi]`` for free dofs with ``G = 0`` on fixed ones."""
        if self._factor is None:
            sysm = with_dirichlet(LinearSystem(self.matrix, np.zeros(2 * self.mesh.n_nodes)),
                                  self.fixed_dofs, 0.0)
            self._factor = Factorization(sysm)
        rhs = (np.asarray(dual, dtype=float) * self.free[:, None]).ravel()
        return self._factor.solve(rhs).reshape(-1, 2)


def a_inner(ip: InnerProductOperator, v, w) -> float:
    return ip.inner(v, w)


@dataclass(frozen=True, eq=False)
class GradientDeformation:
    field: NodalField
    a_norm_sq: float

    @property
    def a_norm(self) -> float:
        return float(np.sqrt(self.a_norm_sq))


def compute_gradient_deformation(dj: ShapeDerivative, ip: InnerProductOperator) -> GradientDeformation:
    if dj.mesh_id != ip.mesh.uid:
        raise MeshError("shape derivative and inner product live on different meshes")
    g = ip.riesz(dj.values)
    norm_sq = ip.norm_sq(g)
    if norm_sq <= ZERO_NORM_SQ:
        return GradientDeformation(NodalField.zeros(ip.mesh), 0.0)
    return GradientDeformation(NodalField.on(ip.mesh, g), norm_sq)


def descent_value(dj: ShapeDerivative, d) -> float:
    """``dJ[D]``, equal to ``a(G, D)`` for the gradient deformation G."""
    return dj.pair(d)


def solve_mu_field(mesh: TriMesh, mu_max: float = 500.0, mu_min: float = 1.0,
                   max_tags=("obstacle",), min_tags=("inlet", "wall", "outlet")) -> np.ndarray:
    """Nodal harmonic field equal to ``mu_max`` on ``max_tags`` and ``mu_min`` on ``min_tags``."""
    if isinstance(max_tags, str):
        max_tags = (max_tags,)
    if isinstance(min_tags, str):
        min_tags = (min_tags,)
    if not max_tags or not min_tags:
        raise MeshError("mu field needs both max and min boundary tags")
    hi = mesh.tag_nodes(max_tags)
    lo = mesh.tag_nodes(min_tags)
    space = FunctionSpace(mesh, "P1")
    a = assemble_poisson(space)
    dofs = np.concatenate([lo, hi])
    vals = np.concatenate([np.full(len(lo), mu_min), np.full(len(hi), mu_max)])
    return solve(with_dirichlet(LinearSystem(a, np.zeros(mesh.n_nodes)), dofs, vals))


def assemble_shape_dual(mesh: TriMesh, tensor: np.ndarray, vector: np.ndarray | None = None) -> np.ndarray:
    """Dual vector of ``V -> int T : DV + b . V dx`` over P1 deformation fields.

    ``tensor`` is ``(M, Q, 2, 2)`` (or ``(M, 2, 2)`` if constant per
    triangle) with ``(T : DV) = sum_cd T_cd dV_c/dx_d``; ``vector`` is
    ``(M, Q, 2)`` at the degree-4 quadrature points.
    """
    area, g = barycentric_gradients(mesh)
    if tensor.ndim == 3:
        t_int = tensor * area[:, None, None]
    else:
        t_int = np.einsum("q,mqcd->mcd", TRI_WEIGHTS, tensor) * area[:, None, None]
    local = np.einsum("mcd,mad->mac", t_int, g)                     # (M, 3, 2)
    if vector is not None:
        local += area[:, None, None] * np.einsum("q,qa,mqc->mac", TRI_WEIGHTS, TRI_POINTS, vector)
    tri = mesh.triangles
    out = np.zeros((mesh.n_nodes, 2))
    for c in range(2):
        out[:, c] = scatter_vector(tri, local[:, :, c], mesh.n_nodes)
    return out


class VolumeFunctional:
    """``J(Omega) = |Omega|``; no PDE, used to check the derivative plumbing."""

    fixed_tags: tuple[str, ...] = ()

    def solve_state(self, mesh):
        return None

    def solve_adjoint(self, mesh, state):
        return None

    def cost(self, mesh, state) -> float:
        return mesh.total_area

    def shape_derivative(self, mesh, state, adjoint) -> ShapeDerivative:
        eye = np.broadcast_to(np.eye(2), (mesh.n_triangles, 2, 2))
        free = np.ones(mesh.n_nodes, dtype=bool)
        return ShapeDerivative(assemble_shape_dual(mesh, eye), mesh.uid, free)

    def evaluate(self, mesh) -> float:
        return self.cost(mesh, None)


# -- finite-difference oracle --------------------------------------------------
@dataclass
class FDRow:
    t: float
    fd_value: float
    assembled: float
    rel_error: float
    order: float | None


@dataclass
class FDReport:
    rows: list[FDRow]

    @property
    def assembled(self) -> float:
        return self.rows[0].assembled

    def error_at(self, t: float) -> float:
        return min(self.rows, key=lambda r: abs(np.log(r.t / t))).rel_error

    @property
    def orders(self) -> list[float]:
        return [r.order for r in self.rows if r.order is not None]

    @property
    def min_order(self) -> float | None:
        o = self.orders
        return min(o) if o else None

    def passed(self, rel_tol: float = 1e-4, min_order: float = 1.8) -> bool:
        ok = self.rows[-1].rel_error <= rel_tol
        if self.orders:
            ok = ok and self.min_order >= min_order
        return bool(ok)

    def format_table(self) -> str:
        lines = [f"{'t':>10} {'fd_value':>24} {'assembled_value':>24} {'rel_error':>12} {'order':>7}"]
        for r in self.rows:
            order = "" if r.order is None else f"{r.order:.3f}"
            lines.append(f"{r.t:>10.1e} {r.fd_value:>24.16e} {r.assembled:>24.16e} "
                         f"{r.rel_error:>12.4e} {order:>7}")
        return "\n".join(lines)


def fd_check(problem, mesh: TriMesh, v: NodalField, steps=(1e-3, 1e-4, 1e-5),
             area_floor: float = 0.1) -> FDReport:
    """Compare the assembled ``dJ[V]`` with central differences of ``J((I +- tV) Omega)``.

    The perturbed costs are computed from fresh state solves on moved copies
    of the mesh, so nothing from the adjoint path enters the reference value.
    ``order`` is the observed rate between consecutive step sizes.
    """
    v.check(mesh)
    state = problem.solve_state(mesh)
    adjoint = problem.solve_adjoint(mesh, state)
    dj = problem.shape_derivative(mesh, state, adjoint)
    assembled = descent_value(dj, v)
    rows = []
    steps = sorted(steps, reverse=True)
    for t in steps:
        plus = deform(mesh, v * t)
        minus = deform(mesh, v * (-t))
        for m in (plus, minus):
            if not admissibility(mesh, m, area_floor).admissible:
                raise MeshError(f"perturbation t={t:g} produces an inadmissible mesh")
        fd = (problem.evaluate(plus) - problem.evaluate(minus)) / (2 * t)
        err = abs(fd - assembled) / max(abs(assembled), np.finfo(float).tiny)
        order = None
        if rows and rows[-1].rel_error > 0 and err > 0:
            order = float(np.log(rows[-1].rel_error / err) / np.log(rows[-1].t / t))
        rows.append(FDRow(t, fd, assembled, err, order))
    return FDReport(rows)


def random_smooth_field(mesh: TriMesh, rng: np.random.Generator, free: np.ndarray | None = None,
                        modes: int = 3, amplitude: float = 1.0, support=None) -> NodalField:
    """Sum of low-frequency sine modes over the mesh bounding box.

    ``support(x)`` optionally multiplies the field by a cutoff that vanishes
    where the deformation must not act; ``free`` zeroes fixed nodes.
    """
    x = mesh.nodes
    lo, hi = x.min(axis=0), x.max(axis=0)
    s = (x - lo) / (hi - lo)
    v = np.zeros_like(x)
    for c in range(2):
        for i in range(1, modes + 1):
            for j in range(1, modes + 1):
                a, ph1, ph2 = rng.normal() / (i * j), rng.uniform(0, np.pi), rng.uniform(0, np.pi)
                v[:, c] += a * np.sin(i * np.pi * s[:, 0] + ph1) * np.sin(j * np.pi * s[:, 1] + ph2)
    if support is not None:
        v *= np.asarray(support(x))[:, None]
    if free is not None:
        v *= free[:, None]
    peak = np.abs(v).max()
    if peak > 0:
        v *= amplitude / peak
    return NodalField.on(mesh, v)
