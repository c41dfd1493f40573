from .assemble import (assemble_boundary_load, assemble_boundary_mass, assemble_elasticity,
                       assemble_load, assemble_mass, assemble_poisson, assemble_stokes,
                       facet_geometry, facet_owners, scatter_matrix, scatter_vector)
from .quadrature import LINE_POINTS, LINE_WEIGHTS, TRI_DEGREE, TRI_POINTS, TRI_WEIGHTS
from .solve import (Factorization, LinearSystem, SolverError, apply_mean_zero_constraint, solve,
                    with_dirichlet)
from .spaces import (FunctionSpace, barycentric_gradients, p2_gradients, p2_values,
                     quadrature_points)

__all__ = [
    "assemble_boundary_load", "assemble_boundary_mass", "assemble_elasticity", "assemble_load",
    "assemble_mass", "assemble_poisson", "assemble_stokes", "facet_geometry", "facet_owners",
    "scatter_matrix", "scatter_vector", "LINE_POINTS", "LINE_WEIGHTS", "TRI_DEGREE", "TRI_POINTS",
    "TRI_WEIGHTS", "Factorization", "LinearSystem", "SolverError", "apply_mean_zero_constraint",
    "solve", "with_dirichlet", "FunctionSpace", "barycentric_gradients", "p2_gradients",
    "p2_values", "quadrature_points",
]
