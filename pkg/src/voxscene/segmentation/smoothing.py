"""Uniform Laplacian mesh relaxation.

Synchronous (double-buffered) update v <- v + lambda * (mean(1-ring) - v).
Vertices on boundary edges (edges bordering exactly one triangle) and
vertices with no neighbors are held fixed; connectivity, parts, and counts
never change. Stale per-vertex normals are dropped from the result.
"""

from __future__ import annotations

import numpy as np

from ..accel import NUMBA_ENABLED, njit
from ..core import Mesh
from ..errors import ParameterOutOfRange

__all__ = ["laplacian_smooth", "vertex_adjacency"]


def vertex_adjacency(triangles: np.ndarray, n_vertices: int):
    """CSR 1-ring adjacency plus the free-vertex mask.

    Returns (starts, neighbors, free) where neighbors[starts[v]:starts[v+1]]
    lists v's 1-ring in ascending order.
    """
    if len(triangles) == 0:
        starts = np.zeros(n_vertices + 1, dtype=np.int64)
        return starts, np.zeros(0, dtype=np.int64), np.zeros(n_vertices, dtype=bool)

    halfedges = triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    halfedges = halfedges[halfedges[:, 0] != halfedges[:, 1]]  # drop degenerate self-edges
    lo = halfedges.min(axis=1)
    hi = halfedges.max(axis=1)
    keys = lo * n_vertices + hi
    unique_keys, counts = np.unique(keys, return_counts=True)
    ulo = unique_keys // n_vertices
    uhi = unique_keys % n_vertices

    boundary = counts == 1
    fixed = np.zeros(n_vertices, dtype=bool)
    fixed[ulo[boundary]] = True
    fixed[uhi[boundary]] = True

    ends = np.concatenate([ulo, uhi])
    other = np.concatenate([uhi, ulo])
    order = np.lexsort((other, ends))
    ends, other = ends[order], other[order]
    starts = np.zeros(n_vertices + 1, dtype=np.int64)
    np.add.at(starts, ends + 1, 1)
    starts = np.cumsum(starts)

    degree = starts[1:] - starts[:-1]
    free = (~fixed) & (degree > 0)
    return starts, other.astype(np.int64), free


@njit(cache=True)
def _smooth_kernel(src, dst, starts, neighbors, free, lam):  # pragma: no cover - via dispatch
    n = src.shape[0]
    for v in range(n):
        if not free[v]:
            dst[v, 0] = src[v, 0]
            dst[v, 1] = src[v, 1]
            dst[v, 2] = src[v, 2]
            continue
        sx = 0.0
        sy = 0.0
        sz = 0.0
        for p in range(starts[v], starts[v + 1]):
            w = neighbors[p]
            sx += src[w, 0]
            sy += src[w, 1]
            sz += src[w, 2]
        deg = starts[v + 1] - starts[v]
        dst[v, 0] = src[v, 0] + lam * (sx / deg - src[v, 0])
        dst[v, 1] = src[v, 1] + lam * (sy / deg - src[v, 1])
        dst[v, 2] = src[v, 2] + lam * (sz / deg - src[v, 2])


def _smooth_step_numpy(src, starts, neighbors, free, lam):
    if len(neighbors):
        # reduceat rejects indices == len(a); clamp, garbage rows are non-free
        idx = np.minimum(starts[:-1], len(neighbors) - 1)
        sums = np.add.reduceat(src[neighbors], idx, axis=0)
    else:
        sums = np.zeros_like(src)
    degree = (starts[1:] - starts[:-1]).astype(np.float64)
    out = src.copy()
    deg = degree[free][:, None]
    out[free] = src[free] + lam * (sums[free] / deg - src[free])
    return out


def laplacian_smooth(mesh: Mesh, iterations: int, lam: float) -> Mesh:
    """Relax free vertices toward their 1-ring mean for `iterations` steps."""
    if iterations < 0:
        raise ParameterOutOfRange(f"iterations must be >= 0, got {iterations}")
    if not (0.0 < lam <= 1.0):
        raise ParameterOutOfRange(f"lambda must be in (0, 1], got {lam}")

    verts = mesh.vertices.copy()
    if iterations == 0 or mesh.triangle_count == 0:
        return Mesh(verts, mesh.triangles.copy(), normals=None, parts=list(mesh.parts))

    starts, neighbors, free = vertex_adjacency(mesh.triangles, mesh.vertex_count)
    if NUMBA_ENABLED:
        src = verts
        dst = np.empty_like(src)
        for _ in range(iterations):
            _smooth_kernel(src, dst, starts, neighbors, free, float(lam))
            src, dst = dst, src
        out = src
    else:
        out = verts
        for _ in range(iterations):
            out = _smooth_step_numpy(out, starts, neighbors, free, float(lam))
    return Mesh(out, mesh.triangles.copy(), normals=None, parts=list(mesh.parts))
