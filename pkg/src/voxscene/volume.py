"""Voxel volumes built from image stacks, slice access, edge-preserving
diffusion, and intensity statistics.

Samples are normalized to [0, 1] at ingest so the diffusion conductance
scale is independent of source bit depth. Arrays are indexed [z, y, x]
(C order, x fastest). Diffusion runs an explicit 6-neighbor scheme with
conductance g(d) = exp(-(d/kappa)^2) and zero-flux (mirrored) boundaries;
lambda is capped at 1/6, the stability bound of the stencil, which also
makes every update a convex combination (min/max principle holds exactly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .accel import NUMBA_ENABLED, njit
from .errors import ParameterOutOfRange

__all__ = [
    "Volume",
    "Slice2D",
    "IntensityStats",
    "VolumeError",
    "DimensionMismatch",
    "EmptyStack",
    "UnsupportedPixelFormat",
    "IndexOutOfRange",
    "load_stack",
    "load_stack_dir",
    "get_slice",
    "anisotropic_diffusion",
    "intensity_stats",
]

MAX_DIFFUSION_LAMBDA = 1.0 / 6.0


class VolumeError(Exception):
    pass


class DimensionMismatch(VolumeError):
    pass


class EmptyStack(VolumeError):
    pass


class UnsupportedPixelFormat(VolumeError):
    pass


class IndexOutOfRange(VolumeError):
    pass


class Volume:
    """Axis-aligned scalar voxel grid.

    data: (nz, ny, nx) float64 in [0, 1]; dims reported as (nx, ny, nz);
    spacing (sx, sy, sz) is the physical size of one voxel.
    """

    def __init__(self, data: np.ndarray, spacing=(1.0, 1.0, 1.0)):
        data = np.ascontiguousarray(data, dtype=np.float64)
        if data.ndim != 3:
            raise VolumeError(f"volume data must be 3-D, got shape {data.shape}")
        if data.size == 0:
            raise VolumeError("volume has no voxels")
        if float(data.min()) < 0.0 or float(data.max()) > 1.0:
            raise VolumeError("volume samples must lie in [0, 1]")
        sx, sy, sz = (float(s) for s in spacing)
        if min(sx, sy, sz) <= 0.0:
            raise VolumeError(f"spacing must be positive, got {spacing}")
        self.data = data
        self.spacing = (sx, sy, sz)

    @property
    def dims(self) -> tuple[int, int, int]:
        nz, ny, nx = self.data.shape
        return (nx, ny, nz)

    @property
    def voxel_volume(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz

    def __repr__(self):
        return f"Volume(dims={self.dims}, spacing={self.spacing})"


@dataclass(frozen=True)
class Slice2D:
    width: int
    height: int
    index: int
    data: np.ndarray  # (height, width) float64 in [0, 1]


@dataclass(frozen=True)
class IntensityStats:
    minimum: float
    maximum: float
    mean: float
    std: float
    histogram: np.ndarray  # bin counts over [0, 1]


def _normalize_raster(img: np.ndarray, label: str) -> np.ndarray:
    if img.ndim != 2:
        raise UnsupportedPixelFormat(f"{label}: expected single-channel 2-D raster, got shape {img.shape}")
    if img.dtype == np.uint8:
        return img.astype(np.float64) / 255.0
    if img.dtype == np.uint16:
        return img.astype(np.float64) / 65535.0
    raise UnsupportedPixelFormat(f"{label}: unsupported dtype {img.dtype}, need uint8 or uint16")


def load_stack(images: Sequence[np.ndarray], spacing=(1.0, 1.0, 1.0), names: Sequence[str] | None = None) -> Volume:
    """Stack ordered 2-D grayscale rasters into a Volume (slice k -> z=k)."""
    if len(images) == 0:
        raise EmptyStack("no slices supplied")
    if names is None:
        names = [f"slice {k}" for k in range(len(images))]
    first = None
    planes = []
    for k, img in enumerate(images):
        img = np.asarray(img)
        plane = _normalize_raster(img, names[k])
        if first is None:
            first = plane.shape
        elif plane.shape != first:
            raise DimensionMismatch(
                f"{names[k]}: size {plane.shape[1]}x{plane.shape[0]} differs from first slice "
                f"{first[1]}x{first[0]}"
            )
        planes.append(plane)
    return Volume(np.stack(planes, axis=0), spacing=spacing)


def load_stack_dir(path, spacing=(1.0, 1.0, 1.0)) -> Volume:
    """Load a directory of PNG slices, ordered lexicographically by filename."""
    from PIL import Image

    root = Path(path)
    if not root.is_dir():
        raise EmptyStack(f"not a directory: {root}")
    files = sorted(p for p in root.iterdir() if p.suffix.lower() == ".png")
    if not files:
        raise EmptyStack(f"no .png slices in {root}")
    images = []
    for p in files:
        with Image.open(p) as im:
            if im.mode == "L":
                arr = np.asarray(im, dtype=np.uint8)
            elif im.mode in ("I;16", "I;16B", "I;16L"):
                arr = np.asarray(im, dtype=np.uint16)
            elif im.mode == "I":
                wide = np.asarray(im, dtype=np.int32)
                if wide.min() < 0 or wide.max() > 65535:
                    raise UnsupportedPixelFormat(f"{p.name}: integer PNG exceeds 16-bit range")
                arr = wide.astype(np.uint16)
            else:
                raise UnsupportedPixelFormat(f"{p.name}: mode {im.mode}, need 8- or 16-bit grayscale")
        images.append(arr)
    return load_stack(images, spacing=spacing, names=[p.name for p in files])


def get_slice(volume: Volume, index: int) -> Slice2D:
    nz, ny, nx = volume.data.shape
    if not (0 <= index < nz):
        raise IndexOutOfRange(f"slice index {index} outside [0, {nz})")
    return Slice2D(width=nx, height=ny, index=index, data=volume.data[index].copy())


# ------------------------------------------------------------ diffusion

def _diffuse_step_numpy(src: np.ndarray, kappa: float, lam: float) -> np.ndarray:
    acc = np.zeros_like(src)
    d = np.zeros_like(src)
    for axis, sign in ((2, +1), (2, -1), (1, +1), (1, -1), (0, +1), (0, -1)):
        d[...] = 0.0
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        if sign > 0:
            lo[axis] = slice(0, -1)
            hi[axis] = slice(1, None)
        else:
            lo[axis] = slice(1, None)
            hi[axis] = slice(0, -1)
        d[tuple(lo)] = src[tuple(hi)] - src[tuple(lo)]
        acc += np.exp(-((d / kappa) ** 2)) * d
    out = src + lam * acc
    np.clip(out, 0.0, 1.0, out=out)
    return out


@njit(cache=True)
def _diffuse_step_numba(src, dst, kappa, lam):  # pragma: no cover - exercised via dispatch
    nz, ny, nx = src.shape
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                c = src[k, j, i]
                acc = 0.0
                if i + 1 < nx:
                    d = src[k, j, i + 1] - c
                    acc += math.exp(-((d / kappa) ** 2)) * d
                if i - 1 >= 0:
                    d = src[k, j, i - 1] - c
                    acc += math.exp(-((d / kappa) ** 2)) * d
                if j + 1 < ny:
                    d = src[k, j + 1, i] - c
                    acc += math.exp(-((d / kappa) ** 2)) * d
                if j - 1 >= 0:
                    d = src[k, j - 1, i] - c
                    acc += math.exp(-((d / kappa) ** 2)) * d
                if k + 1 < nz:
                    d = src[k + 1, j, i] - c
                    acc += math.exp(-((d / kappa) ** 2)) * d
                if k - 1 >= 0:
                    d = src[k - 1, j, i] - c
                    acc += math.exp(-((d / kappa) ** 2)) * d
                v = c + lam * acc
                if v < 0.0:
                    v = 0.0
                elif v > 1.0:
                    v = 1.0
                dst[k, j, i] = v


def anisotropic_diffusion(volume: Volume, iterations: int, kappa: float, lam: float) -> Volume:
    """Run `iterations` explicit diffusion steps; returns a new Volume."""
    if iterations < 0:
        raise ParameterOutOfRange(f"iterations must be >= 0, got {iterations}")
    if not (kappa > 0.0):
        raise ParameterOutOfRange(f"kappa must be > 0, got {kappa}")
    if not (0.0 < lam <= MAX_DIFFUSION_LAMBDA):
        raise ParameterOutOfRange(f"lambda must be in (0, 1/6], got {lam}")
    if iterations == 0:
        return Volume(volume.data.copy(), spacing=volume.spacing)

    if NUMBA_ENABLED:
        src = volume.data.copy()
        dst = np.empty_like(src)
        for _ in range(iterations):
            _diffuse_step_numba(src, dst, float(kappa), float(lam))
            src, dst = dst, src
        out = src
    else:
        out = volume.data
        for _ in range(iterations):
            out = _diffuse_step_numpy(out, float(kappa), float(lam))
    return Volume(out, spacing=volume.spacing)


def intensity_stats(volume: Volume, bins: int) -> IntensityStats:
    """Exact min/max/mean/population-sigma plus a histogram over [0, 1].

    Bin k covers [k/B, (k+1)/B); the top bin is closed at 1.
    """
    if bins < 1:
        raise ParameterOutOfRange(f"bins must be >= 1, got {bins}")
    flat = volume.data.ravel()
    hist, _ = np.histogram(flat, bins=bins, range=(0.0, 1.0))
    return IntensityStats(
        minimum=float(flat.min()),
        maximum=float(flat.max()),
        mean=float(flat.mean()),
        std=float(flat.std()),
        histogram=hist,
    )
