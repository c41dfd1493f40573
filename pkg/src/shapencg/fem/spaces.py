"""Lagrange spaces on affine triangles and their reference basis functions."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..mesh import TriMesh
from .quadrature import TRI_POINTS

KINDS = ("P1", "P1v", "P2", "P2v", "TaylorHood")


def barycentric_gradients(mesh: TriMesh) -> tuple[np.ndarray, np.ndarray]:
    """Per-triangle area ``(M,)`` and gradients of the barycentric coordinates ``(M, 3, 2)``."""
    x = mesh.nodes[mesh.triangles]
    e1 = x[:, 1] - x[:, 0]
    e2 = x[:, 2] - x[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    g1 = np.column_stack([e2[:, 1], -e2[:, 0]]) / det[:, None]
    g2 = np.column_stack([-e1[:, 1], e1[:, 0]]) / det[:, None]
    grads = np.stack([-g1 - g2, g1, g2], axis=1)
    return 0.5 * det, grads


def quadrature_points(mesh: TriMesh, bary: np.ndarray = TRI_POINTS) -> np.ndarray:
    """Physical coordinates ``(M, Q, 2)`` of barycentric points on every triangle."""
    return np.einsum("qa,mad->mqd", bary, mesh.nodes[mesh.triangles])


def p2_values(bary: np.ndarray) -> np.ndarray:
    """P2 basis at barycentric points, ``(Q, 6)``: 3 vertex then 3 edge functions.

    Edge function ``3 + i`` lives on the edge opposite vertex ``i``.
    """
    l0, l1, l2 = bary.T
    return np.column_stack([l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
                            4 * l1 * l2, 4 * l2 * l0, 4 * l0 * l1])


def p2_gradients(bary: np.ndarray, glam: np.ndarray) -> np.ndarray:
    """Physical gradients ``(M, Q, 6, 2)`` of the P2 basis."""
    lam = bary[None, :, :, None]                       # (1, Q, 3, 1)
    g = glam[:, None, :, :]                            # (M, 1, 3, 2)
    vert = (4 * lam - 1) * g                           # (M, Q, 3, 2)
    l0, l1, l2 = (lam[:, :, i] for i in range(3))
    g0, g1, g2 = (g[:, :, i] for i in range(3))
    e0 = 4 * (l1 * g2 + l2 * g1)
    e1 = 4 * (l2 * g0 + l0 * g2)
    e2 = 4 * (l0 * g1 + l1 * g0)
    return np.concatenate([vert, np.stack([e0, e1, e2], axis=2)], axis=2)


@dataclass(frozen=True, eq=False)
class FunctionSpace:
    """Degree-of-freedom layout for one of the supported element kinds.

    Vector spaces interleave components (dof ``2*node + c``).  For Taylor-Hood
    the velocity block (P2v) comes first, followed by the P1 pressure.
    """

    mesh: TriMesh
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}; expected one of {KINDS}")

    @property
    def n_scalar_nodes(self) -> int:
        if self.kind in ("P1", "P1v"):
            return self.mesh.n_nodes
        return self.mesh.n_nodes + len(self.mesh.topology.edges[0])

    @property
    def n_velocity_dofs(self) -> int:
        return 2 * self.n_scalar_nodes

    @property
    def n_dofs(self) -> int:
        if self.kind in ("P1", "P2"):
            return self.n_scalar_nodes
        if self.kind in ("P1v", "P2v"):
            return 2 * self.n_scalar_nodes
        return 2 * self.n_scalar_nodes + self.mesh.n_nodes

    @cached_property
    def scalar_cell_nodes(self) -> np.ndarray:
        """Scalar node index per local basis function, ``(M, 3)`` or ``(M, 6)``."""
        tri = self.mesh.triangles
        if self.kind in ("P1", "P1v"):
            return tri
        _, t2e = self.mesh.topology.edges
        return np.hstack([tri, self.mesh.n_nodes + t2e])

    @cached_property
    def cell_dofs(self) -> np.ndarray:
        nodes = self.scalar_cell_nodes
        if self.kind in ("P1", "P2"):
            return nodes
        vel = np.stack([2 * nodes, 2 * nodes + 1], axis=2).reshape(len(nodes), -1)
        if self.kind == "TaylorHood":
            return np.hstack([vel, self.n_velocity_dofs + self.mesh.triangles])
        return vel

    def scalar_node_coords(self) -> np.ndarray:
        x = self.mesh.nodes
        if self.kind in ("P1", "P1v"):
            return x
        edges, _ = self.mesh.topology.edges
        return np.vstack([x, 0.5 * (x[edges[:, 0]] + x[edges[:, 1]])])

    def boundary_scalar_nodes(self, tags) -> np.ndarray:
        """Scalar nodes on facets with the given tags (vertices plus edge midpoints)."""
        verts = self.mesh.tag_nodes(tags)
        if self.kind in ("P1", "P1v") or len(verts) == 0:
            return verts
        edges, _ = self.mesh.topology.edges
        f = np.sort(self.mesh.facets_with(tags), axis=1)
        # locate each facet among the sorted unique edges
        key = edges[:, 0] * self.mesh.n_nodes + edges[:, 1]
        fk = f[:, 0] * self.mesh.n_nodes + f[:, 1]
        pos = np.searchsorted(key, fk)
        return np.concatenate([verts, self.mesh.n_nodes + pos])

