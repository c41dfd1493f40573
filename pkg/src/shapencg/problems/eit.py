"""Interface identification from boundary potentials (electrical impedance tomography).

State, for each current pattern ``f_i``::

    int kappa grad u_i . grad v dx = int_dD f_i v ds,    int_dD u_i ds = 0

with ``kappa`` piecewise constant on the ``in``/``out`` cells.  Cost::

    J = sum_i nu_i / 2 int_dD (u_i - m_i)^2 ds

Differentiating the Lagrangian ``J + sum_i a(u_i, p_i) - (f_i, p_i)_dD``
gives the adjoint

    int kappa grad p_i . grad v dx = -nu_i int_dD (u_i - m_i) v ds

solved with the same mean-zero multiplier (the system matrix is symmetric,
so the discrete adjoint is the transpose solve), and, because the outer
boundary does not move, the shape derivative has no boundary term::

    dJ[V] = sum_i int kappa ((div V) I - DV - DV^T) grad u_i . grad p_i dx
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..fem import (Factorization, FunctionSpace, LinearSystem, apply_mean_zero_constraint,
                   assemble_boundary_load, assemble_boundary_mass, assemble_poisson,
                   barycentric_gradients)
from ..mesh import MeshError, TriMesh, atomic_write_text, generate_square_with_interface
from ..shape_core import ElasticityParams, ShapeDerivative, assemble_shape_dual
from .base import ShapeFunctional

SIDES = ("bottom", "right", "top", "left")
# +1 / -1 sides of the three current patterns
PATTERNS = (
    (("left", "right"), ("top", "bottom")),
    (("left", "top"), ("right", "bottom")),
    (("left", "bottom"), ("right", "top")),
)
REFERENCE_CIRCLE = ((0.5, 0.5), 0.2)
INITIAL_SQUARE = ((0.5, 0.5), 0.4)


def perimeter_coordinate(points: np.ndarray, box=((0.0, 0.0), (1.0, 1.0))) -> np.ndarray:
    """Counter-clockwise arc length from the lower-left corner of an axis-aligned box."""
    (x0, y0), (x1, y1) = box
    w, h = x1 - x0, y1 - y0
    x, y = points[:, 0], points[:, 1]
    tol = 1e-9 * max(w, h)
    s = np.full(len(points), np.nan)
    on = np.abs(y - y0) <= tol
    s[on] = (x - x0)[on]
    on = np.isnan(s) & (np.abs(x - x1) <= tol)
    s[on] = w + (y - y0)[on]
    on = np.isnan(s) & (np.abs(y - y1) <= tol)
    s[on] = w + h + (x1 - x)[on]
    on = np.isnan(s) & (np.abs(x - x0) <= tol)
    s[on] = 2 * w + h + (y1 - y)[on]
    if np.isnan(s).any():
        raise MeshError("point not on the outer boundary")
    return s


@dataclass(frozen=True)
class Measurements:
    """Boundary potentials sampled at arc-length positions, one column per pattern."""

    arclength: np.ndarray
    values: np.ndarray
    perimeter: float = 4.0

    def at(self, s: np.ndarray) -> np.ndarray:
        """Periodic piecewise-linear interpolation in arc length."""
        order = np.argsort(self.arclength)
        sa, va = self.arclength[order], self.values[order]
        return np.column_stack([np.interp(s, sa, va[:, i], period=self.perimeter)
                                for i in range(va.shape[1])])

    def to_text(self) -> str:
        lines = ["# arclength " + " ".join(f"m{i + 1}" for i in range(self.values.shape[1]))]
        for s, row in zip(self.arclength, self.values):
            lines.append(" ".join(f"{x:.17g}" for x in (s, *row)))
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        atomic_write_text(path, self.to_text())

    @classmethod
    def load(cls, path) -> "Measurements":
        data = np.loadtxt(path, comments="#", ndmin=2)
        return cls(data[:, 0], data[:, 1:])


def _kappa(mesh: TriMesh, kappa_in: float, kappa_out: float) -> np.ndarray:
    if mesh.cell_tags is None:
        raise MeshError("EIT needs in/out cell tags")
    return np.where(mesh.cell_tags == "in", kappa_in, kappa_out)


def _currents(mesh: TriMesh) -> np.ndarray:
    cols = []
    for plus, minus in PATTERNS:
        cols.append(assemble_boundary_load(mesh, plus, 1.0) - assemble_boundary_load(mesh, minus, 1.0))
    return np.column_stack(cols)


def _factor(mesh: TriMesh, kappa: np.ndarray) -> Factorization:
    a = assemble_poisson(FunctionSpace(mesh, "P1"), kappa)
    sysm = LinearSystem(a, np.zeros(mesh.n_nodes))
    return Factorization(apply_mean_zero_constraint(sysm, assemble_boundary_load(mesh, SIDES, 1.0)))


def forward_potentials(mesh: TriMesh, kappa_in: float = 10.0, kappa_out: float = 1.0) -> np.ndarray:
    """Solve the three transmission problems; returns ``(N, 3)`` nodal potentials."""
    fac = _factor(mesh, _kappa(mesh, kappa_in, kappa_out))
    b = _currents(mesh)
    return np.column_stack([fac.solve(b[:, i]) for i in range(b.shape[1])])


def synthesize_measurements(target_elems: int = 11870, kappa_in: float = 10.0,
                            kappa_out: float = 1.0) -> Measurements:
    """Boundary traces of the forward solve with the reference circular inclusion."""
    ref = generate_square_with_interface(("circle", *REFERENCE_CIRCLE), target_elems)
    u = forward_potentials(ref, kappa_in, kappa_out)
    nodes = ref.tag_nodes(SIDES)
    s = perimeter_coordinate(ref.nodes[nodes])
    order = np.argsort(s)
    return Measurements(s[order], u[nodes[order]])


def load_or_synthesize(cache: str | os.PathLike | None, target_elems: int = 11870,
                       kappa_in: float = 10.0, kappa_out: float = 1.0) -> Measurements:
    if cache is not None and Path(cache).exists():
        return Measurements.load(cache)
    meas = synthesize_measurements(target_elems, kappa_in, kappa_out)
    if cache is not None:
        meas.save(cache)
    return meas


@dataclass
class EITState:
    u: np.ndarray                 # (N, 3)
    factor: Factorization


class EITProblem(ShapeFunctional):
    """Identify the ``in`` region; only interior nodes move (outer sides fixed).

    ``initial_mesh`` fixes the weights ``nu_i``: every summand of the cost
    equals one on it unless ``weights`` is given explicitly.
    """

    name = "eit"
    fixed_tags = SIDES

    def __init__(self, initial_mesh: TriMesh, measurements: Measurements,
                 kappa_in: float = 10.0, kappa_out: float = 1.0,
                 elasticity: ElasticityParams | None = None, weights=None):
        if kappa_in <= 0 or kappa_out <= 0:
            raise ValueError("conductivities must be positive")
        self.kappa_in, self.kappa_out = float(kappa_in), float(kappa_out)
        self.elasticity = elasticity or ElasticityParams(lam=0.0, mu=1.0, delta=0.0, fixed_tags=SIDES)
        self.fixed_tags = tuple(self.elasticity.fixed_tags) or SIDES
        nodes = initial_mesh.tag_nodes(SIDES)
        self._bnodes = nodes
        self._topology = initial_mesh.topology
        m = np.zeros((initial_mesh.n_nodes, measurements.values.shape[1]))
        m[nodes] = measurements.at(perimeter_coordinate(initial_mesh.nodes[nodes]))
        self.m = m
        self.measurements = measurements
        if weights is None:
            state = self.solve_state(initial_mesh)
            parts = self._summands(initial_mesh, state.u)
            if np.any(parts <= 0):
                raise ValueError("initial geometry already matches a measurement; pass weights")
            weights = 1.0 / parts
        self.nu = np.broadcast_to(np.asarray(weights, dtype=float), (m.shape[1],)).copy()

    def _check(self, mesh: TriMesh) -> None:
        if mesh.topology is not self._topology:
            raise MeshError("EIT problem is bound to the topology of its initial mesh")

    def _summands(self, mesh: TriMesh, u: np.ndarray) -> np.ndarray:
        mb = assemble_boundary_mass(mesh, SIDES)
        r = u - self.m
        return 0.5 * np.einsum("ni,ni->i", r, mb @ r)

    def solve_state(self, mesh: TriMesh) -> EITState:
        self._check(mesh)
        fac = _factor(mesh, _kappa(mesh, self.kappa_in, self.kappa_out))
        b = _currents(mesh)
        return EITState(np.column_stack([fac.solve(b[:, i]) for i in range(b.shape[1])]), fac)

    def solve_adjoint(self, mesh: TriMesh, state: EITState) -> np.ndarray:
        mb = assemble_boundary_mass(mesh, SIDES)
        rhs = -(mb @ (state.u - self.m)) * self.nu
        return np.column_stack([state.factor.solve(rhs[:, i]) for i in range(rhs.shape[1])])

    def cost(self, mesh: TriMesh, state: EITState) -> float:
        return float(np.sum(self.nu * self._summands(mesh, state.u)))

    def shape_derivative(self, mesh: TriMesh, state: EITState, adjoint: np.ndarray) -> ShapeDerivative:
        _, g = barycentric_gradients(mesh)
        tri = mesh.triangles
        kappa = _kappa(mesh, self.kappa_in, self.kappa_out)
        tensor = np.zeros((mesh.n_triangles, 2, 2))
        for i in range(state.u.shape[1]):
            gu = np.einsum("ma,mad->md", state.u[tri, i], g)
            gp = np.einsum("ma,mad->md", adjoint[tri, i], g)
            outer = np.einsum("mc,md->mcd", gp, gu)
            tensor += kappa[:, None, None] * (np.einsum("md,md->m", gu, gp)[:, None, None] * np.eye(2)
                                              - outer - outer.transpose(0, 2, 1))
        return self.derivative(mesh, assemble_shape_dual(mesh, tensor))

    def interface_radii(self, mesh: TriMesh, center=REFERENCE_CIRCLE[0]) -> np.ndarray:
        nodes = mesh.tag_nodes("interface")
        return np.linalg.norm(mesh.nodes[nodes] - np.asarray(center), axis=1)
