from .base import ShapeFunctional
from .poisson import PoissonProblem, PoissonState, paper_source, paper_source_grad

__all__ = ["ShapeFunctional", "PoissonProblem", "PoissonState", "paper_source", "paper_source_grad"]
from .eit import EITProblem, Measurements, load_or_synthesize, synthesize_measurements  # noqa: E402
from .stokes import StokesObstacleProblem, parabolic_inflow, polygon_geometry  # noqa: E402

__all__ += ["EITProblem", "Measurements", "load_or_synthesize", "synthesize_measurements",
            "StokesObstacleProblem", "parabolic_inflow", "polygon_geometry"]
