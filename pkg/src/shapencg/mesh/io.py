"""Mesh and field file formats.

Native format::

    trimesh 2
    nodes N
    x y            (N lines)
    cells M
    i j k          (M lines, optional 4th column: cell tag)
    facets K
    i j tag        (K lines)
"""
from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .core import MeshError, NodalField, TriMesh


def atomic_write_text(path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_native(mesh: TriMesh, path) -> Path:
    lines = ["trimesh 2", f"nodes {mesh.n_nodes}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.nodes.tolist()]
    lines.append(f"cells {mesh.n_triangles}")
    if mesh.cell_tags is None:
        lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    else:
        lines += [f"{i} {j} {k} {c}" for (i, j, k), c in zip(mesh.triangles.tolist(), mesh.cell_tags)]
    lines.append(f"facets {len(mesh.facets)}")
    lines += [f"{i} {j} {t}" for (i, j), t in zip(mesh.facets.tolist(), mesh.facet_tags)]
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_native(path) -> TriMesh:
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows or rows[0] != ["trimesh", "2"]:
        raise MeshError(f"{path}: not a 'trimesh 2' file")
    pos = 1

    def section(name):
        nonlocal pos
        if rows[pos][0] != name:
            raise MeshError(f"{path}: expected section {name!r}, got {rows[pos][0]!r}")
        n = int(rows[pos][1])
        block = rows[pos + 1:pos + 1 + n]
        pos += 1 + n
        return block

    nodes = np.array([[float(a), float(b)] for a, b in section("nodes")])
    cells = section("cells")
    tri = np.array([[int(c) for c in r[:3]] for r in cells], dtype=np.int64)
    cell_tags = [r[3] for r in cells] if cells and len(cells[0]) > 3 else None
    fac = section("facets")
    facets = np.array([[int(r[0]), int(r[1])] for r in fac], dtype=np.int64)
    tags = [r[2] for r in fac]
    return TriMesh.from_arrays(nodes, tri, facets, tags, cell_tags)


def read_gmsh2(path) -> TriMesh:
    """Import a Gmsh v2 ASCII mesh (2-node lines and 3-node triangles).

    Physical names, when present, become tags; otherwise the physical id is
    used as the tag string.
    """
    lines = Path(path).read_text().splitlines()
    names: dict[int, str] = {}
    node_index: dict[int, int] = {}
    coords, tris, tri_tags, facets, facet_tags = [], [], [], [], []
    i = 0
    while i < len(lines):
        head = lines[i].strip()
        if head == "$MeshFormat":
            if not lines[i + 1].split()[0].startswith("2"):
                raise MeshError(f"{path}: only Gmsh format 2.x is supported")
        elif head == "$PhysicalNames":
            n = int(lines[i + 1])
            for ln in lines[i + 2:i + 2 + n]:
                dim, tag, name = ln.split(maxsplit=2)
                names[int(tag)] = name.strip().strip('"')
        elif head == "$Nodes":
            n = int(lines[i + 1])
            for ln in lines[i + 2:i + 2 + n]:
                parts = ln.split()
                node_index[int(parts[0])] = len(coords)
                coords.append((float(parts[1]), float(parts[2])))
        elif head == "$Elements":
            n = int(lines[i + 1])
            for ln in lines[i + 2:i + 2 + n]:
                parts = [int(p) for p in ln.split()]
                etype, ntags = parts[1], parts[2]
                phys = parts[3] if ntags > 0 else 0
                verts = [node_index[v] for v in parts[3 + ntags:]]
                label = names.get(phys, str(phys))
                if etype == 1:
                    facets.append(verts)
                    facet_tags.append(label)
                elif etype == 2:
                    tris.append(verts)
                    tri_tags.append(label)
        i += 1
    if not tris:
        raise MeshError(f"{path}: no triangles found")
    cell_tags = tri_tags if len(set(tri_tags)) > 1 else None
    return TriMesh.from_arrays(np.array(coords), tris, facets, facet_tags, cell_tags)


def write_vtk(mesh: TriMesh, path, fields: dict[str, NodalField | np.ndarray] | None = None,
              cell_data: dict[str, np.ndarray] | None = None) -> Path:
    """Legacy ASCII VTK 2.0 unstructured grid with point (and cell) data."""
    out = ["# vtk DataFile Version 2.0", "shapencg mesh", "ASCII", "DATASET UNSTRUCTURED_GRID",
           f"POINTS {mesh.n_nodes} double"]
    out += [f"{x:.17g} {y:.17g} 0" for x, y in mesh.nodes.tolist()]
    m = mesh.n_triangles
    out.append(f"CELLS {m} {4 * m}")
    out += [f"3 {i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    out.append(f"CELL_TYPES {m}")
    out += ["5"] * m
    if fields:
        out.append(f"POINT_DATA {mesh.n_nodes}")
        for name, f in fields.items():
            if isinstance(f, NodalField):
                f.check(mesh)
                f = f.values
            f = np.asarray(f, dtype=float)
            if f.ndim == 1:
                out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
                out += [f"{v:.17g}" for v in f.tolist()]
            else:
                out.append(f"VECTORS {name} double")
                out += [f"{a:.17g} {b:.17g} 0" for a, b in f[:, :2].tolist()]
    if cell_data:
        out.append(f"CELL_DATA {m}")
        for name, c in cell_data.items():
            out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            out += [f"{v:.17g}" for v in np.asarray(c, dtype=float).tolist()]
    return atomic_write_text(path, "\n".join(out) + "\n")


def read_vtk_points(path) -> np.ndarray:
    """Read back the POINTS block of a legacy VTK file (x, y columns)."""
    lines = Path(path).read_text().splitlines()
    for i, ln in enumerate(lines):
        if ln.startswith("POINTS"):
            n = int(ln.split()[1])
            return np.array([[float(v) for v in r.split()[:2]] for r in lines[i + 1:i + 1 + n]])
    raise MeshError(f"{path}: no POINTS section")
