"""Common interface of the benchmark shape functionals."""
from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from ..mesh import TriMesh
from ..shape_core import ElasticityParams, InnerProductOperator, ShapeDerivative


class ShapeFunctional(ABC):
    """Reduced functional ``J(Omega)`` with its state, adjoint and shape derivative.

    Subclasses set ``fixed_tags`` (boundaries that may not move) and
    ``elasticity`` (the parameters of the metric).
    """

    name = "abstract"
    fixed_tags: tuple[str, ...] = ()
    elasticity: ElasticityParams

    @abstractmethod
    def solve_state(self, mesh: TriMesh): ...

    @abstractmethod
    def solve_adjoint(self, mesh: TriMesh, state): ...

    @abstractmethod
    def cost(self, mesh: TriMesh, state) -> float: ...

    @abstractmethod
    def shape_derivative(self, mesh: TriMesh, state, adjoint) -> ShapeDerivative: ...

    def evaluate(self, mesh: TriMesh) -> float:
        return self.cost(mesh, self.solve_state(mesh))

    def inner_product(self, mesh: TriMesh) -> InnerProductOperator:
        return InnerProductOperator.build(mesh, self.elasticity)

    def free_nodes(self, mesh: TriMesh) -> np.ndarray:
        free = np.ones(mesh.n_nodes, dtype=bool)
        if self.fixed_tags:
            free[mesh.tag_nodes(self.fixed_tags)] = False
        return free

    def derivative(self, mesh: TriMesh, dual: np.ndarray) -> ShapeDerivative:
        return ShapeDerivative(dual, mesh.uid, self.free_nodes(mesh))
