"""Vectorized assembly of the forms used by the benchmark problems."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..mesh import TriMesh
from .quadrature import LINE_POINTS, LINE_WEIGHTS, TRI_POINTS, TRI_WEIGHTS
from .spaces import FunctionSpace, barycentric_gradients, p2_gradients, quadrature_points

# P1 element mass matrix divided by the element area
_P1_MASS = (np.ones((3, 3)) + np.eye(3)) / 12.0


def scatter_matrix(rows: np.ndarray, cols: np.ndarray, local: np.ndarray, shape) -> sp.csr_matrix:
    """Sum element matrices ``local[e, a, b]`` into ``(rows[e, a], cols[e, b])``."""
    r = np.broadcast_to(rows[:, :, None], local.shape).ravel()
    c = np.broadcast_to(cols[:, None, :], local.shape).ravel()
    return sp.csr_matrix((local.ravel(), (r, c)), shape=shape)


def scatter_vector(rows: np.ndarray, local: np.ndarray, n: int) -> np.ndarray:
    return np.bincount(rows.ravel(), weights=local.ravel(), minlength=n)


def _cell_coefficient(mesh: TriMesh, coefficient) -> np.ndarray:
    c = np.broadcast_to(np.asarray(coefficient, dtype=float), (mesh.n_triangles,))
    return c


def assemble_poisson(space: FunctionSpace, coefficient=1.0) -> sp.csr_matrix:
    """Stiffness matrix of ``int kappa grad u . grad v`` for a P1 space, kappa per triangle."""
    if space.kind != "P1":
        raise ValueError("assemble_poisson expects a P1 space")
    mesh = space.mesh
    kappa = _cell_coefficient(mesh, coefficient)
    if np.any(kappa <= 0):
        raise ValueError("diffusion coefficient must be positive")
    area, g = barycentric_gradients(mesh)
    local = (kappa * area)[:, None, None] * np.einsum("mad,mbd->mab", g, g)
    t = mesh.triangles
    return scatter_matrix(t, t, local, (mesh.n_nodes, mesh.n_nodes))


def assemble_mass(space: FunctionSpace, coefficient=1.0) -> sp.csr_matrix:
    if space.kind != "P1":
        raise ValueError("assemble_mass expects a P1 space")
    mesh = space.mesh
    area = mesh.areas * _cell_coefficient(mesh, coefficient)
    local = area[:, None, None] * _P1_MASS
    t = mesh.triangles
    return scatter_matrix(t, t, local, (mesh.n_nodes, mesh.n_nodes))


def assemble_load(space: FunctionSpace, density) -> np.ndarray:
    """Load vector ``int f v`` on a P1 space.

    ``density`` is a callable ``f(x, y)`` (evaluated at the degree-4
    quadrature points), a nodal array, or a scalar.
    """
    if space.kind != "P1":
        raise ValueError("assemble_load expects a P1 space")
    mesh = space.mesh
    if callable(density):
        xq = quadrature_points(mesh)
        fq = np.asarray(density(xq[..., 0], xq[..., 1]), dtype=float)
        fq = np.broadcast_to(fq, xq.shape[:2])
    else:
        f = np.asarray(density, dtype=float)
        if f.ndim == 0:
            fq = np.full((mesh.n_triangles, len(TRI_WEIGHTS)), float(f))
        else:
            fq = f[mesh.triangles] @ TRI_POINTS.T
    local = mesh.areas[:, None] * np.einsum("q,mq,qa->ma", TRI_WEIGHTS, fq, TRI_POINTS)
    return scatter_vector(mesh.triangles, local, mesh.n_nodes)


def facet_geometry(mesh: TriMesh, tags):
    """Facets with the given tags, their lengths and outward unit normals.

    The outward direction is taken with respect to the adjacent triangle.
    """
    f = mesh.facets_with(tags)
    x0, x1 = mesh.nodes[f[:, 0]], mesh.nodes[f[:, 1]]
    d = x1 - x0
    length = np.hypot(d[:, 0], d[:, 1])
    n = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
    # orient against the third vertex of the owning triangle
    owner = facet_owners(mesh, f)
    third = mesh.nodes[owner[1]]
    flip = np.einsum("fd,fd->f", third - x0, n) > 0
    n[flip] *= -1
    return f, length, n


def facet_owners(mesh: TriMesh, facets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Triangle index and opposite vertex for each facet (one adjacent triangle)."""
    edges, t2e = mesh.topology.edges
    n = mesh.n_nodes
    key = edges[:, 0] * n + edges[:, 1]
    fs = np.sort(facets, axis=1)
    eid = np.searchsorted(key, fs[:, 0] * n + fs[:, 1])
    flat = t2e.ravel()
    order = np.argsort(flat, kind="stable")
    first = order[np.searchsorted(flat[order], eid)]
    tri, local = np.divmod(first, 3)
    return tri, mesh.triangles[tri, local]


def assemble_boundary_mass(mesh: TriMesh, tags) -> sp.csr_matrix:
    """P1 boundary mass matrix ``int_G u v ds`` over the tagged facets."""
    f = mesh.facets_with(tags)
    length = np.linalg.norm(mesh.nodes[f[:, 1]] - mesh.nodes[f[:, 0]], axis=1)
    local = length[:, None, None] * (np.ones((2, 2)) + np.eye(2)) / 6.0
    return scatter_matrix(f, f, local, (mesh.n_nodes, mesh.n_nodes))


def assemble_boundary_load(mesh: TriMesh, tags, g=1.0) -> np.ndarray:
    """P1 boundary load ``int_G g v ds``; ``g`` scalar or callable ``g(x, y)``."""
    f = mesh.facets_with(tags)
    x0, x1 = mesh.nodes[f[:, 0]], mesh.nodes[f[:, 1]]
    length = np.linalg.norm(x1 - x0, axis=1)
    s = LINE_POINTS
    xq = x0[:, None, :] + s[None, :, None] * (x1 - x0)[:, None, :]
    if callable(g):
        gq = np.asarray(g(xq[..., 0], xq[..., 1]), dtype=float)
    else:
        gq = np.full(xq.shape[:2], float(g))
    phi = np.column_stack([1 - s, s])
    local = length[:, None] * np.einsum("q,fq,qa->fa", LINE_WEIGHTS, gq, phi)
    return scatter_vector(f, local, mesh.n_nodes)


def assemble_elasticity(space: FunctionSpace, lam: float, mu, delta: float) -> sp.csr_matrix:
    """Matrix of ``int 2 mu eps(V):eps(W) + lam div V div W + delta V.W``.

    ``mu`` is a constant or a nodal array (linear interpolation).  Dirichlet
    conditions are not applied here.
    """
    if space.kind != "P1v":
        raise ValueError("assemble_elasticity expects a P1v space")
    mesh = space.mesh
    mu_nodes = np.broadcast_to(np.asarray(mu, dtype=float), (mesh.n_nodes,))
    if np.any(mu_nodes <= 0):
        raise ValueError("mu_elas must be positive")
    if 2 * mu_nodes.min() + 2 * lam <= 0:
        raise ValueError("need 2 mu + 2 lambda > 0")
    if delta < 0:
        raise ValueError("delta_elas must be non-negative")
    area, g = barycentric_gradients(mesh)
    # mu is linear on each triangle, so its mean is the exact average
    mu_bar = mu_nodes[mesh.triangles].mean(axis=1)
    gg = np.einsum("mad,mbd->mab", g, g)
    eye = np.eye(2)
    # K[(a,c),(b,d)] = mu (delta_cd ga.gb + ga_d gb_c) + lam ga_c gb_d
    k = (mu_bar[:, None, None, None, None]
         * (eye[None, None, :, None, :] * gg[:, :, None, :, None]
            + np.einsum("mad,mbc->macbd", g, g))
         + lam * np.einsum("mac,mbd->macbd", g, g))
    k *= area[:, None, None, None, None]
    if delta:
        k += delta * area[:, None, None, None, None] * (_P1_MASS[None, :, None, :, None]
                                                        * eye[None, None, :, None, :])
    local = k.reshape(len(area), 6, 6)
    dofs = space.cell_dofs
    return scatter_matrix(dofs, dofs, local, (space.n_dofs, space.n_dofs))


def assemble_stokes(space: FunctionSpace, viscosity: float = 1.0) -> sp.csr_matrix:
    """Saddle-point matrix ``[[nu A, B^T], [B, 0]]`` with ``B = -(q, div u)``.

    The natural boundary term of this form is the do-nothing condition
    ``nu du/dn - p n = 0``.
    """
    if space.kind != "TaylorHood":
        raise ValueError("assemble_stokes expects a TaylorHood space")
    mesh = space.mesh
    area, glam = barycentric_gradients(mesh)
    dphi = p2_gradients(TRI_POINTS, glam)                       # (M, Q, 6, 2)
    wa = area[:, None] * TRI_WEIGHTS[None, :]                   # (M, Q)
    lap = np.einsum("mq,mqad,mqbd->mab", wa, dphi, dphi)        # (M, 6, 6)
    m = len(area)
    a = np.zeros((m, 6, 2, 6, 2))
    a[:, :, 0, :, 0] = viscosity * lap
    a[:, :, 1, :, 1] = viscosity * lap
    # B[q_a, (b, d)] = -int lam_a d_d phi_b
    b = -np.einsum("mq,qa,mqbd->mabd", wa, TRI_POINTS, dphi).reshape(m, 3, 12)
    vdofs = space.cell_dofs[:, :12]
    pdofs = space.cell_dofs[:, 12:]
    shape = (space.n_dofs, space.n_dofs)
    A = scatter_matrix(vdofs, vdofs, a.reshape(m, 12, 12), shape)
    B = scatter_matrix(pdofs, vdofs, b, shape)
    return (A + B + B.T).tocsr()
