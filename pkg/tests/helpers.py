"""Shared test utilities: independent oracles and geometry generators.

Oracles here deliberately avoid the code paths they check: transforms are
verified against explicit 4x4 matrices, meshes against brute-force loops.
"""

import math

import numpy as np

from voxscene.core import Mesh, MeshPart, Transform, UnitQuat, Vec3


# ---------------------------------------------------------------- transforms

def quat_to_matrix(q: UnitQuat) -> np.ndarray:
    w, x, y, z = q.w, q.x, q.y, q.z
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def transform_to_matrix(t: Transform) -> np.ndarray:
    """Homogeneous 4x4 for p -> position + R(scale*p)."""
    m = np.eye(4)
    m[:3, :3] = quat_to_matrix(t.rotation) * t.scale
    m[:3, 3] = [t.position.x, t.position.y, t.position.z]
    return m


def matrix_apply(m: np.ndarray, p: Vec3) -> np.ndarray:
    v = m @ np.array([p.x, p.y, p.z, 1.0])
    return v[:3]


def random_quat(rng) -> UnitQuat:
    v = rng.normal(size=4)
    v /= np.linalg.norm(v)
    return UnitQuat(*v)


def random_transform(rng, span=5.0) -> Transform:
    pos = Vec3(*rng.uniform(-span, span, size=3))
    scale = float(np.exp(rng.uniform(-1.5, 1.5)))
    return Transform(position=pos, rotation=random_quat(rng), scale=scale)


def random_vec3(rng, span=5.0) -> Vec3:
    return Vec3(*rng.uniform(-span, span, size=3))


# ---------------------------------------------------------------- meshes

def cube_mesh(size=1.0, origin=(0.0, 0.0, 0.0)) -> Mesh:
    """Axis-aligned cube as 12 triangles with outward winding."""
    o = np.asarray(origin, dtype=np.float64)
    corners = np.array([
        [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
        [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
    ], dtype=np.float64) * size + o
    quads = [
        (0, 3, 2, 1),  # z=0, normal -z
        (4, 5, 6, 7),  # z=1, normal +z
        (0, 1, 5, 4),  # y=0, normal -y
        (2, 3, 7, 6),  # y=1, normal +y
        (0, 4, 7, 3),  # x=0, normal -x
        (1, 2, 6, 5),  # x=1, normal +x
    ]
    tris = []
    for a, b, c, d in quads:
        tris.append((a, b, c))
        tris.append((a, c, d))
    return Mesh(corners, np.array(tris))


def icosphere(subdivisions=2, radius=1.0) -> Mesh:
    """Icosahedron subdivided and projected onto the sphere."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(v, dtype=np.float64) / np.linalg.norm(v) for v in verts]
    cache: dict[tuple[int, int], int] = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            m = verts[i] + verts[j]
            verts.append(m / np.linalg.norm(m))
            cache[key] = len(verts) - 1
        return cache[key]

    for _ in range(subdivisions):
        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    v = np.array(verts) * radius
    return Mesh(v, np.array(faces))


def tetrahedron(scale=1.0) -> Mesh:
    v = np.array([
        [1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1],
    ], dtype=np.float64) * scale
    f = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    return Mesh(v, f)


def random_mesh(rng, max_triangles=1000, float32_grid=True) -> Mesh:
    """Random triangle soup with some shared vertices and 1-3 named parts."""
    nv = int(rng.integers(3, 60))
    verts = rng.uniform(-10, 10, size=(nv, 3))
    if float32_grid:
        verts = verts.astype(np.float32).astype(np.float64)
    nt = int(rng.integers(1, max_triangles + 1))
    tris = np.empty((nt, 3), dtype=np.int64)
    for i in range(nt):
        tris[i] = rng.choice(nv, size=3, replace=False)
    nparts = min(int(rng.integers(1, 4)), nt)
    cuts = sorted(rng.choice(np.arange(1, nt), size=nparts - 1, replace=False)) if nparts > 1 else []
    bounds = [0] + [int(c) for c in cuts] + [nt]
    parts = [MeshPart(f"part{i}", bounds[i], bounds[i + 1]) for i in range(nparts)]
    return Mesh(verts, tris, parts=parts)


def triangle_multiset(mesh: Mesh):
    """Multiset of coordinate triples, winding-preserving, order-free."""
    tris = mesh.vertices[mesh.triangles]  # (m, 3, 3)
    rows = [tuple(tri.ravel()) for tri in tris]
    return sorted(rows)


# ---------------------------------------------------------------- volumes

def ball_volume_data(n=32, radius=8.0, center=None):
    """(n,n,n) float array, 1.0 inside the ball, indexed [z, y, x]."""
    if center is None:
        center = ((n - 1) / 2.0,) * 3
    zz, yy, xx = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    cz, cy, cx = center
    inside = (xx - cx) ** 2 + (yy - cy) ** 2 + (zz - cz) ** 2 <= radius ** 2
    return inside.astype(np.float64)
