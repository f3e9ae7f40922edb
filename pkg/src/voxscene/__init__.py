"""voxscene: headless scientific-scene engine and collaborative session server.

Pipeline side: image stacks -> voxel volumes -> edge-preserving diffusion ->
threshold/label segmentation -> isosurface meshes -> smoothing -> shape and
intensity reports, with OBJ/STL import/export. Session side: an authoritative
sequencer replicating a shared scene to any number of clients over
WebSocket/TCP, driving the browser viewer.
"""

from .core import (
    IDENTITY,
    Material,
    MaterialPreset,
    Mesh,
    MeshPart,
    Scene,
    SceneObject,
    Transform,
    UnitQuat,
    Vec3,
    apply,
    compose,
    invert,
)

__version__ = "0.1.0"

__all__ = [
    "IDENTITY",
    "Material",
    "MaterialPreset",
    "Mesh",
    "MeshPart",
    "Scene",
    "SceneObject",
    "Transform",
    "UnitQuat",
    "Vec3",
    "apply",
    "compose",
    "invert",
    "__version__",
]
