"""Dissipation-minimizing obstacle in a Stokes channel.

State (Taylor-Hood), with ``S`` the symmetric saddle matrix of
``(grad u, grad v) - (p, div v) - (q, div u)``::

    S (u, p) = 0,   u = u_in on the inlet, u = 0 on walls and obstacle

Cost::

    J = int |grad u|_F^2 dx + nu1/2 (vol - vol0)^2 + nu2/2 |bc - bc0|^2

The obstacle interior is not meshed, so ``vol`` and ``bc`` come from the
obstacle polygon (shoelace formulas); their derivatives with respect to the
polygon vertices are exact.

Adjoint ``(w, q)``: ``S (w, q) = (-2 A u, 0)`` with ``w = 0`` on every
Dirichlet boundary, where ``A`` is the velocity Laplacian block.  The volume
shape derivative of the flow part is ``int T : DV dx`` with, writing ``Gu``
for the velocity gradient (rows = components)::

    T = |Gu|^2 I - 2 Gu^T Gu
        + (Gu:Gw) I - Gu^T Gw - Gw^T Gu
        - p div(w) I + p Gw^T
        - q div(u) I + q Gu^T
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fem import (TRI_POINTS, Factorization, FunctionSpace, LinearSystem, assemble_stokes,
                   barycentric_gradients, p2_gradients, with_dirichlet)
from ..mesh import MeshError, TriMesh
from ..shape_core import ElasticityParams, ShapeDerivative, assemble_shape_dual
from .base import ShapeFunctional

FIXED = ("inlet", "wall", "outlet")
OBSTACLE = "obstacle"


def parabolic_inflow(y, half_height: float = 2.0):
    """``(h - y)(h + y) / h^2``: peak velocity one on the channel axis."""
    return (half_height - y) * (half_height + y) / half_height ** 2


def polygon_geometry(points: np.ndarray):
    """Area, first moments and their gradients for a closed polygon.

    ``points`` are the vertices in loop order (either orientation).  Returns
    ``(area, moments, d_area, d_moments)`` with ``d_area`` of shape ``(n, 2)``
    and ``d_moments`` of shape ``(2, n, 2)``; the area is positive.
    """
    x, y = points[:, 0], points[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    c = x * yn - xn * y
    sign = 1.0 if c.sum() >= 0 else -1.0
    c = sign * c
    area = 0.5 * c.sum()
    mx = np.sum((x + xn) * c) / 6.0
    my = np.sum((y + yn) * c) / 6.0
    # derivatives of c_i = sign (x_i y_{i+1} - x_{i+1} y_i)
    dc_xi, dc_yi = sign * yn, -sign * xn
    dc_xn, dc_yn = -sign * y, sign * x
    n = len(points)
    nxt = np.roll(np.arange(n), -1)
    d_area = np.zeros((n, 2))
    d_mom = np.zeros((2, n, 2))
    np.add.at(d_area[:, 0], np.arange(n), 0.5 * dc_xi)
    np.add.at(d_area[:, 1], np.arange(n), 0.5 * dc_yi)
    np.add.at(d_area[:, 0], nxt, 0.5 * dc_xn)
    np.add.at(d_area[:, 1], nxt, 0.5 * dc_yn)
    for k, (s, sn) in enumerate(((x, xn), (y, yn))):
        w = (s + sn) / 6.0
        np.add.at(d_mom[k, :, 0], np.arange(n), w * dc_xi)
        np.add.at(d_mom[k, :, 1], np.arange(n), w * dc_yi)
        np.add.at(d_mom[k, :, 0], nxt, w * dc_xn)
        np.add.at(d_mom[k, :, 1], nxt, w * dc_yn)
        np.add.at(d_mom[k, :, k], np.arange(n), c / 6.0)
        np.add.at(d_mom[k, :, k], nxt, c / 6.0)
    return area, np.array([mx, my]), d_area, d_mom


@dataclass
class StokesState:
    x: np.ndarray              # velocity dofs then pressure
    factor: Factorization
    space: FunctionSpace


class StokesObstacleProblem(ShapeFunctional):
    """Only the obstacle moves; volume and barycenter are held by quadratic penalties."""

    name = "stokes"
    fixed_tags = FIXED

    def __init__(self, initial_mesh: TriMesh, nu_vol: float = 1e4, nu_bc: float = 1e2,
                 inflow=parabolic_inflow, viscosity: float = 1.0,
                 elasticity: ElasticityParams | None = None):
        self.nu_vol, self.nu_bc = float(nu_vol), float(nu_bc)
        self.inflow = inflow
        self.viscosity = float(viscosity)
        self.elasticity = elasticity or ElasticityParams(
            lam=0.0, mu="laplace", delta=0.0, fixed_tags=FIXED,
            mu_max=500.0, mu_min=1.0, mu_max_tags=(OBSTACLE,), mu_min_tags=FIXED)
        self.fixed_tags = tuple(self.elasticity.fixed_tags)
        self.vol0, self.bc0 = self.geometry(initial_mesh)

    # -- geometry penalties ----------------------------------------------------
    def obstacle_loop(self, mesh: TriMesh) -> np.ndarray:
        loop = mesh.boundary_loop(OBSTACLE)
        if len(loop) < 3:
            raise MeshError("obstacle boundary is not a closed loop")
        return loop

    def geometry(self, mesh: TriMesh) -> tuple[float, np.ndarray]:
        area, mom, _, _ = polygon_geometry(mesh.nodes[self.obstacle_loop(mesh)])
        return area, mom / area

    def geometry_penalty(self, mesh: TriMesh) -> tuple[float, np.ndarray]:
        """Penalty value and its nodal dual vector ``(N, 2)``."""
        loop = self.obstacle_loop(mesh)
        area, mom, d_area, d_mom = polygon_geometry(mesh.nodes[loop])
        bc = mom / area
        dv, db = area - self.vol0, bc - self.bc0
        value = 0.5 * self.nu_vol * dv ** 2 + 0.5 * self.nu_bc * float(db @ db)
        # d bc_k = (d mom_k - bc_k d area) / area
        d_bc = (d_mom - bc[:, None, None] * d_area[None]) / area
        grad = self.nu_vol * dv * d_area + self.nu_bc * np.einsum("k,knc->nc", db, d_bc)
        out = np.zeros((mesh.n_nodes, 2))
        out[loop] = grad
        return value, out

    # -- flow ------------------------------------------------------------------
    def _dirichlet(self, space: FunctionSpace):
        coords = space.scalar_node_coords()
        inlet = space.boundary_scalar_nodes("inlet")
        noslip = space.boundary_scalar_nodes(("wall", OBSTACLE))
        if len(inlet) == 0 or len(space.boundary_scalar_nodes("outlet")) == 0:
            raise MeshError("channel mesh needs inlet and outlet tags")
        # walls win at the inlet corners (the profile vanishes there anyway)
        inlet = np.setdiff1d(inlet, noslip)
        dofs = np.concatenate([2 * inlet, 2 * inlet + 1, 2 * noslip, 2 * noslip + 1])
        vals = np.concatenate([self.inflow(coords[inlet, 1]), np.zeros(len(inlet)),
                               np.zeros(2 * len(noslip))])
        return dofs, vals

    def solve_state(self, mesh: TriMesh) -> StokesState:
        space = FunctionSpace(mesh, "TaylorHood")
        s = assemble_stokes(space, self.viscosity)
        dofs, vals = self._dirichlet(space)
        fac = Factorization(with_dirichlet(LinearSystem(s, np.zeros(space.n_dofs)), dofs, vals))
        return StokesState(fac.solve(), fac, space)

    def _velocity_gradients(self, space: FunctionSpace, x: np.ndarray) -> np.ndarray:
        """``(M, Q, 2, 2)`` with ``[.., c, d] = d u_c / d x_d``."""
        mesh = space.mesh
        _, glam = barycentric_gradients(mesh)
        dphi = p2_gradients(TRI_POINTS, glam)
        nodes = space.scalar_cell_nodes
        uc = np.stack([x[2 * nodes], x[2 * nodes + 1]], axis=-1)       # (M, 6, 2)
        return np.einsum("mac,mqad->mqcd", uc, dphi)

    def _pressure(self, space: FunctionSpace, x: np.ndarray) -> np.ndarray:
        p = x[space.n_velocity_dofs:]
        return p[space.mesh.triangles] @ TRI_POINTS.T                   # (M, Q)

    def dissipation(self, state: StokesState) -> float:
        n = state.space.n_velocity_dofs
        u = state.x.copy()
        u[n:] = 0.0
        return float(u @ (state.factor.system.matrix @ u)) / self.viscosity

    def cost(self, mesh: TriMesh, state: StokesState) -> float:
        return self.dissipation(state) + self.geometry_penalty(mesh)[0]

    def solve_adjoint(self, mesh: TriMesh, state: StokesState) -> np.ndarray:
        n = state.space.n_velocity_dofs
        u = state.x.copy()
        u[n:] = 0.0
        rhs = -2.0 / self.viscosity * (state.factor.system.matrix @ u)
        rhs[n:] = 0.0
        dd = state.factor.system.dirichlet_dofs
        return state.factor.solve(rhs, dirichlet_values=np.zeros(len(dd)))

    def shape_derivative(self, mesh: TriMesh, state: StokesState, adjoint: np.ndarray) -> ShapeDerivative:
        space = state.space
        gu = self._velocity_gradients(space, state.x)
        gw = self._velocity_gradients(space, adjoint)
        p = self._pressure(space, state.x)
        q = self._pressure(space, adjoint)
        eye = np.eye(2)
        uu = np.einsum("mqcd,mqcd->mq", gu, gu)
        uw = np.einsum("mqcd,mqcd->mq", gu, gw)
        div_u = gu[..., 0, 0] + gu[..., 1, 1]
        div_w = gw[..., 0, 0] + gw[..., 1, 1]
        utu = np.einsum("mqic,mqid->mqcd", gu, gu)
        utw = np.einsum("mqic,mqid->mqcd", gu, gw)
        nu = self.viscosity
        tensor = ((uu[..., None, None] * eye - 2.0 * utu)
                  + nu * (uw[..., None, None] * eye - utw - utw.transpose(0, 1, 3, 2))
                  - (p * div_w)[..., None, None] * eye + p[..., None, None] * gw.transpose(0, 1, 3, 2)
                  - (q * div_u)[..., None, None] * eye + q[..., None, None] * gu.transpose(0, 1, 3, 2))
        dual = assemble_shape_dual(mesh, tensor) + self.geometry_penalty(mesh)[1]
        return self.derivative(mesh, dual)
