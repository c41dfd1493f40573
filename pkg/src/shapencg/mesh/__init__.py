from .core import (MeshError, NodalField, QualityReport, TriMesh, admissibility, deform,
                   signed_areas, transport)
from .generate import generate_channel_with_obstacle, generate_disk, generate_square_with_interface

__all__ = [
    "MeshError", "NodalField", "QualityReport", "TriMesh", "admissibility", "deform",
    "signed_areas", "transport", "generate_channel_with_obstacle", "generate_disk",
    "generate_square_with_interface",
]
from .io import atomic_write_text, read_gmsh2, read_native, read_vtk_points, write_native, write_vtk  # noqa: E402

__all__ += ["atomic_write_text", "read_gmsh2", "read_native", "read_vtk_points", "write_native",
            "write_vtk"]
