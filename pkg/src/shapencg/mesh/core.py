"""Triangle meshes, nodal fields, and the moving-mesh primitives.

A mesh is immutable.  Moving it (``deform``) produces a new mesh that shares
connectivity and tags with its parent, so topology-derived data (edges,
boundary loops) is computed once per connectivity and reused.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

_mesh_ids = itertools.count(1)


class MeshError(ValueError):
    """Raised for malformed meshes or fields indexed against the wrong mesh."""


def signed_areas(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p0 = nodes[triangles[:, 0]]
    p1 = nodes[triangles[:, 1]]
    p2 = nodes[triangles[:, 2]]
    return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                  - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class Topology:
    """Connectivity shared by a mesh and all of its deformed copies."""

    def __init__(self, triangles, facets, facet_tags, cell_tags):
        self.triangles = _frozen(np.asarray(triangles, dtype=np.int64))
        self.facets = _frozen(np.asarray(facets, dtype=np.int64).reshape(-1, 2))
        self.facet_tags = _frozen(np.asarray(facet_tags, dtype=str))
        self.cell_tags = None if cell_tags is None else _frozen(np.asarray(cell_tags, dtype=str))

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique edges (sorted node pairs) and the triangle -> edge map.

        Local edge ``i`` of a triangle is the one opposite local vertex ``i``.
        """
        t = self.triangles
        local = np.stack([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1)
        pairs = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        return _frozen(edges), _frozen(inverse.reshape(-1, 3))

    @cached_property
    def tag_names(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.facet_tags.tolist())))


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Planar triangle mesh with tagged boundary facets.

    ``nodes`` is ``(N, 2)``, ``triangles`` ``(M, 3)`` counterclockwise,
    ``facets`` ``(K, 2)`` with one tag string per facet.  ``cell_tags``
    optionally labels subdomains (e.g. ``"in"``/``"out"``).
    """

    nodes: np.ndarray
    topology: Topology
    uid: int = field(default_factory=lambda: next(_mesh_ids))

    @classmethod
    def from_arrays(cls, nodes, triangles, facets, facet_tags, cell_tags=None,
                    fix_orientation=True) -> "TriMesh":
        nodes = np.array(nodes, dtype=float).reshape(-1, 2)
        tri = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        if tri.size and (tri.min() < 0 or tri.max() >= len(nodes)):
            raise MeshError("triangle references a node out of range")
        facets = np.asarray(facets, dtype=np.int64).reshape(-1, 2)
        facet_tags = np.asarray(facet_tags, dtype=str).reshape(-1)
        if len(facet_tags) != len(facets):
            raise MeshError("need exactly one tag per facet")
        if fix_orientation:
            neg = signed_areas(nodes, tri) < 0
            tri[neg] = tri[neg][:, [0, 2, 1]]
        if cell_tags is not None and len(cell_tags) != len(tri):
            raise MeshError("need exactly one cell tag per triangle")
        mesh = cls(_frozen(nodes), Topology(tri, facets, facet_tags, cell_tags))
        if np.any(mesh.areas <= 0):
            raise MeshError("mesh contains degenerate triangles")
        return mesh

    # -- basic data -------------------------------------------------------
    @property
    def triangles(self) -> np.ndarray:
        return self.topology.triangles

    @property
    def facets(self) -> np.ndarray:
        return self.topology.facets

    @property
    def facet_tags(self) -> np.ndarray:
        return self.topology.facet_tags

    @property
    def cell_tags(self) -> np.ndarray | None:
        return self.topology.cell_tags

    @property
    def tags(self) -> tuple[str, ...]:
        return self.topology.tag_names

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def areas(self) -> np.ndarray:
        return signed_areas(self.nodes, self.triangles)

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    def facets_with(self, tags) -> np.ndarray:
        if isinstance(tags, str):
            tags = (tags,)
        unknown = set(tags) - set(self.tags)
        if unknown:
            raise MeshError(f"unknown boundary tag(s): {sorted(unknown)}")
        return self.facets[np.isin(self.facet_tags, list(tags))]

    def tag_nodes(self, tags) -> np.ndarray:
        """Sorted node indices lying on facets carrying any of ``tags``."""
        if isinstance(tags, str):
            tags = (tags,)
        if not tags:
            return np.zeros(0, dtype=np.int64)
        return np.unique(self.facets_with(tags))

    def boundary_loop(self, tag: str) -> np.ndarray:
        """Node indices of the closed loop formed by facets tagged ``tag``.

        The loop is ordered so that the enclosed region is on the left
        (counterclockwise signed area).
        """
        f = self.facets_with(tag)
        nxt: dict[int, list[int]] = {}
        for a, b in f.tolist():
            nxt.setdefault(a, []).append(b)
            nxt.setdefault(b, []).append(a)
        if any(len(v) != 2 for v in nxt.values()):
            raise MeshError(f"facets tagged {tag!r} do not form a closed loop")
        start = int(f[0, 0])
        loop = [start]
        prev, cur = start, nxt[start][0]
        while cur != start:
            loop.append(cur)
            a, b = nxt[cur]
            prev, cur = cur, (b if a == prev else a)
        if len(loop) != len(nxt):
            raise MeshError(f"facets tagged {tag!r} form more than one loop")
        loop = np.array(loop, dtype=np.int64)
        x = self.nodes[loop]
        area = 0.5 * np.sum(x[:, 0] * np.roll(x[:, 1], -1) - np.roll(x[:, 0], -1) * x[:, 1])
        return loop if area > 0 else loop[::-1]

    def edge_lengths(self) -> np.ndarray:
        edges, _ = self.topology.edges
        return np.linalg.norm(self.nodes[edges[:, 1]] - self.nodes[edges[:, 0]], axis=1)

    def with_nodes(self, nodes: np.ndarray) -> "TriMesh":
        """Same connectivity and tags, new node coordinates."""
        nodes = np.asarray(nodes, dtype=float)
        if nodes.shape != self.nodes.shape:
            raise MeshError("node array shape mismatch")
        return TriMesh(_frozen(nodes.copy()), self.topology)

    def same_connectivity(self, other: "TriMesh") -> bool:
        if self.topology is other.topology:
            return True
        return (np.array_equal(self.triangles, other.triangles)
                and np.array_equal(self.facets, other.facets)
                and np.array_equal(self.facet_tags, other.facet_tags))

    def __repr__(self) -> str:
        return (f"TriMesh(uid={self.uid}, nodes={self.n_nodes}, "
                f"triangles={self.n_triangles}, tags={list(self.tags)})")


@dataclass(frozen=True, eq=False)
class NodalField:
    """One scalar or 2-vector per mesh node, bound to a specific mesh."""

    values: np.ndarray
    mesh_id: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            pass
        elif v.ndim != 2:
            raise MeshError("nodal values must be (N,) or (N, d)")
        if not np.all(np.isfinite(v)):
            raise MeshError("nodal field has non-finite entries")
        object.__setattr__(self, "values", v)

    @classmethod
    def on(cls, mesh: TriMesh, values) -> "NodalField":
        v = np.asarray(values, dtype=float)
        if v.shape[0] != mesh.n_nodes:
            raise MeshError(f"field has {v.shape[0]} rows, mesh has {mesh.n_nodes} nodes")
        return cls(v, mesh.uid)

    @classmethod
    def zeros(cls, mesh: TriMesh, ncomp: int = 2) -> "NodalField":
        shape = (mesh.n_nodes,) if ncomp == 1 else (mesh.n_nodes, ncomp)
        return cls(np.zeros(shape), mesh.uid)

    def check(self, mesh: TriMesh) -> None:
        if self.mesh_id != mesh.uid:
            raise MeshError(f"field belongs to mesh {self.mesh_id}, not {mesh.uid}")

    def __neg__(self):
        return NodalField(-self.values, self.mesh_id)

    def _other(self, other):
        if isinstance(other, NodalField):
            if other.mesh_id != self.mesh_id:
                raise MeshError("fields live on different meshes")
            return other.values
        return other

    def __add__(self, other):
        return NodalField(self.values + self._other(other), self.mesh_id)

    def __sub__(self, other):
        return NodalField(self.values - self._other(other), self.mesh_id)

    def __mul__(self, s):
        return NodalField(self.values * s, self.mesh_id)

    __rmul__ = __mul__


@dataclass(frozen=True)
class QualityReport:
    min_signed_area: float
    min_area_ratio: float
    admissible: bool


def deform(mesh: TriMesh, field: NodalField) -> TriMesh:
    """Move every node by its field value: x_i -> x_i + V_i."""
    field.check(mesh)
    v = field.values
    if v.shape != mesh.nodes.shape:
        raise MeshError("deformation must be a 2-vector field")
    return TriMesh(_frozen(mesh.nodes + v), mesh.topology)


def transport(field: NodalField, source: TriMesh, target: TriMesh) -> NodalField:
    """Carry a field to a deformed mesh; nodal coefficients are kept as-is."""
    field.check(source)
    if not source.same_connectivity(target):
        raise MeshError("transport requires identical connectivity")
    return NodalField(field.values, target.uid)


def admissibility(original: TriMesh, deformed: TriMesh, area_floor: float = 0.1) -> QualityReport:
    if not original.same_connectivity(deformed):
        raise MeshError("admissibility requires identical connectivity")
    a1 = deformed.areas
    ratio = a1 / original.areas
    min_area = float(a1.min())
    min_ratio = float(ratio.min())
    return QualityReport(min_area, min_ratio, bool(min_area > 0 and min_ratio >= area_floor))
