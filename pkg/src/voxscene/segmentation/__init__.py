"""Volume-of-interest extraction: threshold, 6-connected labeling,
isosurface meshing, and mesh relaxation."""

from .labeling import LabelMask, connected_components, threshold
from .isosurface import DegenerateVolume, marching_cubes, component_mesh
from .smoothing import laplacian_smooth

__all__ = [
    "LabelMask",
    "connected_components",
    "threshold",
    "DegenerateVolume",
    "marching_cubes",
    "component_mesh",
    "laplacian_smooth",
]
