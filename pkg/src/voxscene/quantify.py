"""Shape, morphology, and intensity metrics over labeled VOIs and meshes.

Voxel centers sit at ((i+0.5)sx, (j+0.5)sy, (k+0.5)sz); VOI bounding boxes
cover the full physical extent of their voxels. Mesh enclosed volume uses
the divergence theorem and is reported only for watertight meshes (every
edge shared by exactly two triangles); the absolute value is taken so
inconsistent winding in imported files cannot produce a negative volume.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Mesh, Vec3
from .segmentation.labeling import LabelMask
from .volume import Volume

__all__ = ["VoiReport", "MeshReport", "UnknownLabel", "voi_report", "mesh_report"]


class UnknownLabel(ValueError):
    pass


@dataclass(frozen=True)
class VoiReport:
    label: int
    voxel_count: int
    physical_volume: float
    centroid: Vec3
    bbox_min: Vec3
    bbox_max: Vec3
    mean_intensity: float
    std_intensity: float

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "voxel_count": self.voxel_count,
            "physical_volume": self.physical_volume,
            "centroid": [self.centroid.x, self.centroid.y, self.centroid.z],
            "bbox_min": [self.bbox_min.x, self.bbox_min.y, self.bbox_min.z],
            "bbox_max": [self.bbox_max.x, self.bbox_max.y, self.bbox_max.z],
            "mean_intensity": self.mean_intensity,
            "std_intensity": self.std_intensity,
        }


@dataclass(frozen=True)
class MeshReport:
    surface_area: float
    enclosed_volume: Optional[float]  # None unless watertight
    watertight: bool
    triangle_count: int
    vertex_count: int

    def to_dict(self) -> dict:
        return {
            "surface_area": self.surface_area,
            "enclosed_volume": self.enclosed_volume,
            "watertight": self.watertight,
            "triangle_count": self.triangle_count,
            "vertex_count": self.vertex_count,
        }


def voi_report(labels: LabelMask, volume: Volume, label: int) -> VoiReport:
    """Exact per-voxel metrics for one labeled component."""
    if not (1 <= label <= labels.count):
        raise UnknownLabel(f"label {label} outside [1, {labels.count}]")
    if labels.labels.shape != volume.data.shape:
        raise ValueError("label mask and volume dimensions differ")
    mask = labels.labels == label
    count = int(mask.sum())
    if count == 0:
        raise UnknownLabel(f"label {label} has no voxels")

    sx, sy, sz = volume.spacing
    kk, jj, ii = np.nonzero(mask)
    cx = float(((ii + 0.5) * sx).mean())
    cy = float(((jj + 0.5) * sy).mean())
    cz = float(((kk + 0.5) * sz).mean())
    samples = volume.data[mask]
    return VoiReport(
        label=label,
        voxel_count=count,
        physical_volume=count * volume.voxel_volume,
        centroid=Vec3(cx, cy, cz),
        bbox_min=Vec3(float(ii.min() * sx), float(jj.min() * sy), float(kk.min() * sz)),
        bbox_max=Vec3(float((ii.max() + 1) * sx), float((jj.max() + 1) * sy), float((kk.max() + 1) * sz)),
        mean_intensity=float(samples.mean()),
        std_intensity=float(samples.std()),
    )


def _edge_use_counts(triangles: np.ndarray) -> np.ndarray:
    halfedges = triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    keys = np.sort(halfedges, axis=1)
    _, counts = np.unique(keys, axis=0, return_counts=True)
    return counts


def mesh_report(mesh: Mesh) -> MeshReport:
    """Surface area, watertightness, and (when closed) enclosed volume."""
    tri = mesh.vertices[mesh.triangles]
    if len(tri):
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        area = float(0.5 * np.linalg.norm(cross, axis=1).sum())
        watertight = bool((_edge_use_counts(mesh.triangles) == 2).all())
    else:
        area = 0.0
        watertight = False
    volume = None
    if watertight:
        signed = np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0
        volume = float(abs(signed))
    return MeshReport(
        surface_area=area,
        enclosed_volume=volume,
        watertight=watertight,
        triangle_count=mesh.triangle_count,
        vertex_count=mesh.vertex_count,
    )
