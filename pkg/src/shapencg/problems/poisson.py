"""Poisson model problem: minimize ``int u dx`` with ``-lap u = f``, ``u = 0`` on the boundary."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..fem import (FunctionSpace, LinearSystem, TRI_POINTS, assemble_load, assemble_poisson,
                   barycentric_gradients, facet_geometry, facet_owners, quadrature_points, solve,
                   with_dirichlet)
from ..mesh import TriMesh
from ..shape_core import ElasticityParams, ShapeDerivative, assemble_shape_dual
from .base import ShapeFunctional


def paper_source(x, y):
    return 2.5 * (x + 0.4 - y ** 2) ** 2 + x ** 2 + y ** 2 - 1.0


def paper_source_grad(x, y):
    w = x + 0.4 - y ** 2
    return np.stack([5.0 * w + 2.0 * x, -10.0 * w * y + 2.0 * y], axis=-1)


@dataclass
class PoissonState:
    u: np.ndarray


class PoissonProblem(ShapeFunctional):
    """``J = int u dx``; the whole boundary is deformable.

    ``source_grad`` must return the gradient of ``source`` with a trailing
    axis of length 2; it enters the ``-div(f V) p`` term.
    """

    name = "poisson"

    def __init__(self, source: Callable = paper_source, source_grad: Callable | None = paper_source_grad,
                 elasticity: ElasticityParams | None = None, boundary_tags=None):
        if source_grad is None and source is not paper_source:
            if not np.isscalar(source):
                raise ValueError("a non-constant source needs its gradient")
        self.source = source
        self.source_grad = source_grad
        self.elasticity = elasticity or ElasticityParams(lam=1.429, mu=0.357, delta=0.2)
        self.fixed_tags = tuple(self.elasticity.fixed_tags)
        self.boundary_tags = boundary_tags

    def _boundary(self, mesh: TriMesh) -> np.ndarray:
        tags = self.boundary_tags or mesh.tags
        return mesh.tag_nodes(tags)

    def _dirichlet_solve(self, mesh: TriMesh, rhs: np.ndarray) -> np.ndarray:
        a = assemble_poisson(FunctionSpace(mesh, "P1"))
        return solve(with_dirichlet(LinearSystem(a, rhs), self._boundary(mesh), 0.0))

    def _f(self, x, y):
        return self.source(x, y) if callable(self.source) else np.full_like(x, float(self.source))

    def solve_state(self, mesh: TriMesh) -> PoissonState:
        return PoissonState(self._dirichlet_solve(mesh, assemble_load(FunctionSpace(mesh, "P1"), self._f)))

    def solve_adjoint(self, mesh: TriMesh, state: PoissonState) -> np.ndarray:
        return self._dirichlet_solve(mesh, -assemble_load(FunctionSpace(mesh, "P1"), 1.0))

    def cost(self, mesh: TriMesh, state: PoissonState) -> float:
        return float(assemble_load(FunctionSpace(mesh, "P1"), 1.0) @ state.u)

    def shape_derivative(self, mesh: TriMesh, state: PoissonState, adjoint: np.ndarray) -> ShapeDerivative:
        _, g = barycentric_gradients(mesh)
        tri = mesh.triangles
        gu = np.einsum("ma,mad->md", state.u[tri], g)
        gp = np.einsum("ma,mad->md", adjoint[tri], g)
        xq = quadrature_points(mesh)
        uq = state.u[tri] @ TRI_POINTS.T
        pq = adjoint[tri] @ TRI_POINTS.T
        fq = self._f(xq[..., 0], xq[..., 1])
        scal = uq + np.einsum("md,md->m", gu, gp)[:, None] - fq * pq
        outer = np.einsum("mc,md->mcd", gp, gu)
        tensor = scal[..., None, None] * np.eye(2) - (outer + outer.transpose(0, 2, 1))[:, None]
        vector = None
        if self.source_grad is not None and callable(self.source):
            vector = -pq[..., None] * self.source_grad(xq[..., 0], xq[..., 1])
        return self.derivative(mesh, assemble_shape_dual(mesh, tensor, vector))

    def boundary_shape_derivative(self, mesh: TriMesh, state: PoissonState, adjoint: np.ndarray) -> ShapeDerivative:
        """Boundary representation ``-dn u dn p V.n`` on the deformable boundary.

        Normal derivatives come from the adjacent triangle's constant
        gradient, so this only agrees with the volume form up to
        discretization error.
        """
        tags = self.boundary_tags or mesh.tags
        f, length, n = facet_geometry(mesh, tags)
        tri, _ = facet_owners(mesh, f)
        _, g = barycentric_gradients(mesh)
        t = mesh.triangles[tri]
        dnu = np.einsum("fa,fad,fd->f", state.u[t], g[tri], n)
        dnp = np.einsum("fa,fad,fd->f", adjoint[t], g[tri], n)
        w = -dnu * dnp * length / 2.0
        out = np.zeros((mesh.n_nodes, 2))
        for c in range(2):
            np.add.at(out[:, c], f[:, 0], w * n[:, c])
            np.add.at(out[:, c], f[:, 1], w * n[:, c])
        return self.derivative(mesh, out)
