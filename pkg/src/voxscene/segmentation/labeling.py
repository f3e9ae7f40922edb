"""Binary thresholding and 6-connected component labeling.

Labels are assigned in first-encounter scan order (x fastest, then y, then
z), so the labeling is fully deterministic: re-running on the same mask
gives the same labels, and translating a pattern within the grid preserves
its component count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..accel import NUMBA_ENABLED, njit
from ..errors import ParameterOutOfRange
from ..volume import Volume

__all__ = ["LabelMask", "threshold", "connected_components"]


@dataclass(frozen=True)
class LabelMask:
    """Integer component labels per voxel; 0 is background."""

    labels: np.ndarray  # (nz, ny, nx) int32
    count: int

    @property
    def dims(self) -> tuple[int, int, int]:
        nz, ny, nx = self.labels.shape
        return (nx, ny, nz)

    def component(self, label: int) -> np.ndarray:
        return self.labels == label


def threshold(volume: Volume, lo: float, hi: float) -> np.ndarray:
    """Boolean mask of voxels with lo <= sample <= hi (closed interval)."""
    if not (0.0 <= lo <= hi <= 1.0):
        raise ParameterOutOfRange(f"need 0 <= lo <= hi <= 1, got lo={lo}, hi={hi}")
    return (volume.data >= lo) & (volume.data <= hi)


@njit(cache=True)
def _label_kernel(mask, labels, stack):  # pragma: no cover - exercised via dispatch
    nz, ny, nx = mask.shape
    count = 0
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                if not mask[k, j, i] or labels[k, j, i] != 0:
                    continue
                count += 1
                labels[k, j, i] = count
                stack[0] = (k * ny + j) * nx + i
                top = 1
                while top > 0:
                    top -= 1
                    f = stack[top]
                    fi = f % nx
                    fj = (f // nx) % ny
                    fk = f // (nx * ny)
                    if fi + 1 < nx and mask[fk, fj, fi + 1] and labels[fk, fj, fi + 1] == 0:
                        labels[fk, fj, fi + 1] = count
                        stack[top] = f + 1
                        top += 1
                    if fi > 0 and mask[fk, fj, fi - 1] and labels[fk, fj, fi - 1] == 0:
                        labels[fk, fj, fi - 1] = count
                        stack[top] = f - 1
                        top += 1
                    if fj + 1 < ny and mask[fk, fj + 1, fi] and labels[fk, fj + 1, fi] == 0:
                        labels[fk, fj + 1, fi] = count
                        stack[top] = f + nx
                        top += 1
                    if fj > 0 and mask[fk, fj - 1, fi] and labels[fk, fj - 1, fi] == 0:
                        labels[fk, fj - 1, fi] = count
                        stack[top] = f - nx
                        top += 1
                    if fk + 1 < nz and mask[fk + 1, fj, fi] and labels[fk + 1, fj, fi] == 0:
                        labels[fk + 1, fj, fi] = count
                        stack[top] = f + nx * ny
                        top += 1
                    if fk > 0 and mask[fk - 1, fj, fi] and labels[fk - 1, fj, fi] == 0:
                        labels[fk - 1, fj, fi] = count
                        stack[top] = f - nx * ny
                        top += 1
    return count


def _label_numpy(mask: np.ndarray, labels: np.ndarray) -> int:
    """Min-label propagation until fixpoint.

    Each voxel converges to its component's minimum flat index, which is
    exactly that component's first voxel in scan order, so compressing the
    surviving roots in ascending order reproduces first-encounter labels.
    """
    if not mask.any():
        return 0
    sentinel = mask.size
    cur = np.where(mask, np.arange(mask.size, dtype=np.int64).reshape(mask.shape), sentinel)
    while True:
        nxt = cur.copy()
        np.minimum(nxt[:, :, 1:], cur[:, :, :-1], out=nxt[:, :, 1:])
        np.minimum(nxt[:, :, :-1], cur[:, :, 1:], out=nxt[:, :, :-1])
        np.minimum(nxt[:, 1:, :], cur[:, :-1, :], out=nxt[:, 1:, :])
        np.minimum(nxt[:, :-1, :], cur[:, 1:, :], out=nxt[:, :-1, :])
        np.minimum(nxt[1:, :, :], cur[:-1, :, :], out=nxt[1:, :, :])
        np.minimum(nxt[:-1, :, :], cur[1:, :, :], out=nxt[:-1, :, :])
        nxt[~mask] = sentinel
        if np.array_equal(nxt, cur):
            break
        cur = nxt
    roots = cur[mask]
    uniq = np.unique(roots)
    labels[mask] = np.searchsorted(uniq, roots).astype(np.int32) + 1
    return len(uniq)


def connected_components(mask: np.ndarray) -> LabelMask:
    """Label 6-connected regions of a boolean voxel mask."""
    mask = np.ascontiguousarray(mask, dtype=bool)
    if mask.ndim != 3:
        raise ValueError(f"mask must be 3-D, got shape {mask.shape}")
    labels = np.zeros(mask.shape, dtype=np.int32)
    if NUMBA_ENABLED:
        stack = np.empty(mask.size, dtype=np.int64)
        count = int(_label_kernel(mask, labels, stack))
    else:
        count = _label_numpy(mask, labels)
    return LabelMask(labels=labels, count=count)
