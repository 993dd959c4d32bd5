"""Numerical laboratory for recovering divergence-free pretraction tensors of
elastic membranes from their Dirichlet-to-Neumann maps."""
from ._kernels import BACKEND
from .mesh import Mesh, build_rect_mesh, diameter, outward_normal

__version__ = "0.1.0"

__all__ = ["BACKEND", "Mesh", "build_rect_mesh", "diameter", "outward_normal", "__version__"]
