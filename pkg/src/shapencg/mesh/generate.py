"""Benchmark geometries.

The disk is built from concentric node rings joined ring by ring, which with
``target_elems=15000`` reproduces the 7651-node / 15000-triangle layout of the
Poisson benchmark exactly.  The other two geometries are constrained Delaunay
triangulations (Shewchuk's Triangle) of boundary point sets we place
ourselves; boundary segments are never split, so every tagged node is one of
the points placed here.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import triangle as tr

from .core import MeshError, TriMesh

SQRT3_4 = np.sqrt(3.0) / 4.0


# -- disk ----------------------------------------------------------------------
def _ring_counts(target_elems: int) -> list[int]:
    n_rings = max(1, int(round(np.sqrt(target_elems / 6.0))))
    c = target_elems / n_rings**2
    return [max(3, int(round(c * k))) if k > 1 else max(3, int(round(c))) for k in range(1, n_rings + 1)]


def _zip_rings(ids_a, th_a, ids_b, th_b):
    """Triangulate the annulus between two closed rings by angular merging."""
    na, nb = len(ids_a), len(ids_b)
    tris = []
    i = j = 0
    while i < na or j < nb:
        next_a = th_a[(i + 1) % na] + (2 * np.pi if i + 1 >= na else 0.0)
        next_b = th_b[(j + 1) % nb] + (2 * np.pi if j + 1 >= nb else 0.0)
        if j >= nb or (i < na and next_a <= next_b):
            tris.append((ids_a[i % na], ids_b[j % nb], ids_a[(i + 1) % na]))
            i += 1
        else:
            tris.append((ids_a[i % na], ids_b[j % nb], ids_b[(j + 1) % nb]))
            j += 1
    return tris


def generate_disk(center=(0.0, 0.0), radius: float = 1.0, target_elems: int = 15000) -> TriMesh:
    """Quasi-uniform disk mesh; boundary tagged ``outer``."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    if target_elems < 4:
        raise ValueError("need at least 4 elements")
    counts = _ring_counts(int(target_elems))
    n_rings = len(counts)
    nodes = [np.zeros(2)]
    rings = []
    for k, n in enumerate(counts, start=1):
        th = 2 * np.pi * np.arange(n) / n
        r = radius * k / n_rings
        start = len(nodes)
        nodes.extend(np.column_stack([r * np.cos(th), r * np.sin(th)]))
        rings.append((np.arange(start, start + n), th))
    tris = []
    ids, th = rings[0]
    tris += [(0, ids[j], ids[(j + 1) % len(ids)]) for j in range(len(ids))]
    for (ia, ta), (ib, tb) in zip(rings[:-1], rings[1:]):
        tris += _zip_rings(ia, ta, ib, tb)
    outer = rings[-1][0]
    facets = np.column_stack([outer, np.roll(outer, -1)])
    nodes = np.asarray(nodes) + np.asarray(center, dtype=float)
    return TriMesh.from_arrays(nodes, tris, facets, ["outer"] * len(facets))


# -- helpers for constrained triangulations ------------------------------------
def _polyline(points: np.ndarray, h: float, closed: bool) -> np.ndarray:
    """Resample a polyline at spacing close to ``h`` keeping its corners."""
    pts = np.asarray(points, dtype=float)
    if closed:
        pts = np.vstack([pts, pts[:1]])
    out = []
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(np.ceil(np.linalg.norm(b - a) / h - 1e-9)))
        s = np.arange(n) / n
        out.append(a + s[:, None] * (b - a))
    if not closed:
        out.append(pts[-1:])
    return np.vstack(out)


def _circle_points(center, r: float, h: float, n: int | None = None) -> np.ndarray:
    if n is None:
        n = max(8, int(np.ceil(2 * np.pi * r / h)))
    th = 2 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)])


@dataclass
class _PSLG:
    vertices: list
    segments: list
    markers: list

    def add_loop(self, pts: np.ndarray, marker: int | np.ndarray):
        start = sum(len(v) for v in self.vertices)
        n = len(pts)
        idx = start + np.arange(n)
        self.vertices.append(pts)
        self.segments.append(np.column_stack([idx, np.roll(idx, -1)]))
        self.markers.append(np.broadcast_to(np.asarray(marker), (n,)).copy())

    def as_dict(self):
        return {
            "vertices": np.vstack(self.vertices),
            "segments": np.vstack(self.segments).astype(np.int32),
            "segment_markers": np.concatenate(self.markers).astype(np.int32)[:, None],
        }


def _to_mesh(out: dict, names: dict[int, str], cell_names: dict[int, str] | None = None) -> TriMesh:
    segs = out["segments"]
    marks = out["segment_markers"].ravel()
    keep = marks > 0
    tags = [names[int(m)] for m in marks[keep]]
    cell_tags = None
    if cell_names is not None:
        attr = np.rint(out["triangle_attributes"].ravel()).astype(int)
        cell_tags = [cell_names[a] for a in attr]
    return TriMesh.from_arrays(out["vertices"], out["triangles"], segs[keep], tags, cell_tags)


def _calibrate(build, target: int, h0: float, tol: float = 0.03, max_iter: int = 8):
    """Rescale the mesh size until the triangle count is near ``target``."""
    h = h0
    best = None
    for _ in range(max_iter):
        out = build(h)
        n = len(out["triangles"])
        if best is None or abs(n - target) < abs(len(best["triangles"]) - target):
            best = out
        if abs(n - target) <= tol * target:
            break
        h *= np.sqrt(n / target)
    return best


# -- EIT: unit square with an inner inclusion ----------------------------------
def generate_square_with_interface(inner=("square", (0.5, 0.5), 0.4), target_elems: int = 11870,
                                   outer=((0.0, 0.0), (1.0, 1.0))) -> TriMesh:
    """Square hold-all with a resolved inner subdomain.

    ``inner`` is ``("square", center, edge)``, ``("circle", center, radius)``
    or ``("polygon", vertices)``.  Outer sides are tagged ``bottom``,
    ``right``, ``top``, ``left``; the inclusion boundary ``interface``;
    triangles carry ``in``/``out``.
    """
    (x0, y0), (x1, y1) = outer
    kind = inner[0]
    if kind == "square":
        (cx, cy), e = inner[1], inner[2]
        poly = np.array([[cx - e / 2, cy - e / 2], [cx + e / 2, cy - e / 2],
                         [cx + e / 2, cy + e / 2], [cx - e / 2, cy + e / 2]])
        circle = None
    elif kind == "circle":
        (cx, cy), r = inner[1], inner[2]
        poly, circle = None, ((cx, cy), r)
        if r <= 0:
            raise ValueError("inclusion radius must be positive")
        bbox = (cx - r, cy - r, cx + r, cy + r)
    elif kind == "polygon":
        poly = np.asarray(inner[1], dtype=float)
        circle = None
    else:
        raise ValueError(f"unknown inner region kind {kind!r}")
    if poly is not None:
        bbox = (*poly.min(axis=0), *poly.max(axis=0))
    if not (bbox[0] > x0 and bbox[1] > y0 and bbox[2] < x1 and bbox[3] < y1):
        raise MeshError("inner region must lie strictly inside the outer square")

    area = (x1 - x0) * (y1 - y0)
    names = {1: "bottom", 2: "right", 3: "top", 4: "left", 5: "interface"}

    # outer spacing depends on the target only, so meshes built for the same
    # target share their outer boundary nodes whatever the inclusion
    h_side = np.sqrt(area / (SQRT3_4 * target_elems))

    def build(h):
        g = _PSLG([], [], [])
        corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        pts, marks = [], []
        for s in range(4):
            side = _polyline(np.array([corners[s], corners[(s + 1) % 4]]), h_side, closed=False)[:-1]
            pts.append(side)
            marks.append(np.full(len(side), s + 1))
        g.add_loop(np.vstack(pts), np.concatenate(marks))
        if circle is not None:
            ipts = _circle_points(circle[0], circle[1], h)
        else:
            ipts = _polyline(poly, h, closed=True)
        g.add_loop(ipts, 5)
        d = g.as_dict()
        c = ipts.mean(axis=0)
        d["regions"] = np.array([[c[0], c[1], 1, 0], [x0 + 1e-3 * (x1 - x0), y0 + 1e-3 * (y1 - y0), 2, 0]])
        return tr.triangulate(d, f"pq30a{SQRT3_4 * h * h:.15f}AY")

    out = _calibrate(build, target_elems, h_side)
    return _to_mesh(out, names, {1: "in", 2: "out"})


# -- Stokes: channel with a circular obstacle ----------------------------------
def generate_channel_with_obstacle(box=((-3.0, -2.0), (6.0, 2.0)), obstacle=((0.0, 0.0), 0.5),
                                   target_elems: int = 12326, obstacle_nodes: int = 620,
                                   h_far: float = 0.25) -> TriMesh:
    """Flow domain ``box minus disk``, graded from the obstacle to the far field.

    Tags: ``inlet`` (left), ``outlet`` (right), ``wall`` (top/bottom),
    ``obstacle``.  The obstacle carries ``obstacle_nodes`` equally spaced
    nodes and the mesh size grows linearly with the distance from it, capped
    at ``h_far``; the growth rate is tuned to approach ``target_elems``.
    """
    (x0, y0), (x1, y1) = box
    (cx, cy), r = obstacle
    if not (cx - r > x0 and cx + r < x1 and cy - r > y0 and cy + r < y1):
        raise MeshError("obstacle must lie strictly inside the channel")
    if obstacle_nodes < 8:
        raise ValueError("need at least 8 obstacle nodes")
    names = {1: "wall", 2: "outlet", 3: "wall", 4: "inlet", 5: "obstacle"}
    h_obs = 2 * np.pi * r / obstacle_nodes
    h_far = max(h_far, h_obs)

    def build(grading):
        def size(p):
            d = np.maximum(np.hypot(p[:, 0] - cx, p[:, 1] - cy) - r, 0.0)
            return np.minimum(h_obs + grading * d, h_far)

        g = _PSLG([], [], [])
        corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        pts, marks = [], []
        for s in range(4):
            a, b = np.array(corners[s]), np.array(corners[(s + 1) % 4])
            # march along the side with the local size, then stretch to fit
            seg = [a]
            while True:
                p = seg[-1]
                step = float(size(p[None, :])[0])
                if np.linalg.norm(b - p) <= 1.5 * step:
                    break
                seg.append(p + step * (b - a) / np.linalg.norm(b - a))
            seg = np.array(seg)
            total = np.linalg.norm(b - a)
            s_old = np.linalg.norm(seg - a, axis=1)
            if len(seg) > 1:
                s_old = s_old * total / (s_old[-1] + float(size(seg[-1:])[0]))
            pts.append(a + s_old[:, None] * (b - a) / total)
            marks.append(np.full(len(seg), s + 1))
        g.add_loop(np.vstack(pts), np.concatenate(marks))
        g.add_loop(_circle_points((cx, cy), r, h_obs, obstacle_nodes)[::-1], 5)
        d = g.as_dict()
        d["holes"] = np.array([[cx, cy]])
        out = tr.triangulate(d, "pq30Y")
        for _ in range(20):
            v, t = out["vertices"], out["triangles"]
            amax = SQRT3_4 * size(v[t].mean(axis=1)) ** 2
            p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
            area = 0.5 * np.abs((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                                - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))
            if np.all(area <= 1.2 * amax):
                break
            out["triangle_max_area"] = amax
            out = tr.triangulate(out, "rpq30aY")
        return out

    # element count falls roughly like 1 / grading^2, like 1 / h^2 for uniform meshes
    out = _calibrate(build, target_elems, 0.1)
    return _to_mesh(out, names)
