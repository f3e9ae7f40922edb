"""Scene-state and rigid-transform primitives shared by every other module.

World units are meters. A Transform applies scale, then rotation, then
translation; scale is a single uniform factor. All types here are
value-semantic: scene mutation happens only through the owning Scene, one
revision bump per applied operation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

__all__ = [
    "Vec3",
    "UnitQuat",
    "Transform",
    "IDENTITY",
    "compose",
    "invert",
    "apply",
    "MeshPart",
    "Mesh",
    "MaterialPreset",
    "Material",
    "SceneObject",
    "Scene",
    "SceneError",
    "UnknownObject",
]


class SceneError(Exception):
    pass


class UnknownObject(SceneError):
    def __init__(self, object_id: int):
        super().__init__(f"no object with id {object_id}")
        self.object_id = object_id


@dataclass(frozen=True)
class Vec3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite Vec3 component: {self}")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize zero vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @staticmethod
    def from_array(a) -> "Vec3":
        return Vec3(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class UnitQuat:
    """Rotation quaternion, renormalized by every operation that returns one."""

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @staticmethod
    def identity() -> "UnitQuat":
        return UnitQuat(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis: Vec3, angle: float) -> "UnitQuat":
        u = axis.normalized()
        h = 0.5 * angle
        s = math.sin(h)
        return UnitQuat(math.cos(h), u.x * s, u.y * s, u.z * s).normalized()

    def normalized(self) -> "UnitQuat":
        n = math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)
        if n == 0.0:
            raise ValueError("zero quaternion has no direction")
        return UnitQuat(self.w / n, self.x / n, self.y / n, self.z / n)

    def multiply(self, o: "UnitQuat") -> "UnitQuat":
        w = self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z
        x = self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y
        y = self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x
        z = self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w
        return UnitQuat(w, x, y, z).normalized()

    def conjugate(self) -> "UnitQuat":
        return UnitQuat(self.w, -self.x, -self.y, -self.z)

    def rotate(self, v: Vec3) -> Vec3:
        # v' = q v q*, expanded to avoid building temporary quaternions
        tx = 2.0 * (self.y * v.z - self.z * v.y)
        ty = 2.0 * (self.z * v.x - self.x * v.z)
        tz = 2.0 * (self.x * v.y - self.y * v.x)
        return Vec3(
            v.x + self.w * tx + (self.y * tz - self.z * ty),
            v.y + self.w * ty + (self.z * tx - self.x * tz),
            v.z + self.w * tz + (self.x * ty - self.y * tx),
        )

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)


@dataclass(frozen=True)
class Transform:
    """Uniform-scale rigid pose: p -> position + rotation * (scale * p)."""

    position: Vec3 = field(default_factory=Vec3)
    rotation: UnitQuat = field(default_factory=UnitQuat.identity)
    scale: float = 1.0

    def __post_init__(self):
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise ValueError(f"transform scale must be positive, got {self.scale}")

    @staticmethod
    def translation(x: float, y: float, z: float) -> "Transform":
        return Transform(position=Vec3(x, y, z))

    @staticmethod
    def rotation_about(axis: Vec3, angle: float) -> "Transform":
        return Transform(rotation=UnitQuat.from_axis_angle(axis, angle))

    @staticmethod
    def scaling(s: float) -> "Transform":
        return Transform(scale=s)


IDENTITY = Transform()


def apply(t: Transform, p: Vec3) -> Vec3:
    return t.position + t.rotation.rotate(p.scaled(t.scale))


def compose(a: Transform, b: Transform) -> Transform:
    """Transform such that apply(compose(a, b), p) == apply(a, apply(b, p))."""
    return Transform(
        position=a.position + a.rotation.rotate(b.position.scaled(a.scale)),
        rotation=a.rotation.multiply(b.rotation),
        scale=a.scale * b.scale,
    )


def invert(t: Transform) -> Transform:
    inv_scale = 1.0 / t.scale
    conj = t.rotation.conjugate()
    return Transform(
        position=conj.rotate(t.position).scaled(-inv_scale),
        rotation=conj,
        scale=inv_scale,
    )


@dataclass(frozen=True)
class MeshPart:
    """Named triangle range [start, end) into the parent mesh's index list."""

    name: str
    start: int
    end: int

    def __post_init__(self):
        if self.end < self.start:
            raise ValueError(f"part {self.name!r} has end < start")


class Mesh:
    """Indexed triangle geometry with named parts.

    vertices: (n, 3) float64, triangles: (m, 3) int64 vertex indices,
    normals: optional (n, 3) float64. Parts partition the triangle list.
    """

    def __init__(self, vertices, triangles, normals=None, parts=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64).reshape(-1, 3)
        if normals is not None:
            normals = np.ascontiguousarray(normals, dtype=np.float64).reshape(-1, 3)
            if len(normals) != len(self.vertices):
                raise ValueError("normals length must match vertices")
        self.normals = normals
        if parts is None:
            parts = [MeshPart("default", 0, len(self.triangles))]
        self.parts = list(parts)
        self._validate()

    def _validate(self):
        m = len(self.triangles)
        if m and (self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)):
            raise ValueError("triangle index out of range")
        covered = 0
        for p in self.parts:
            if p.start != covered:
                raise ValueError("mesh parts must be contiguous and ordered")
            if p.end <= p.start and m > 0:
                raise ValueError(f"part {p.name!r} is empty")
            covered = p.end
        if covered != m:
            raise ValueError("mesh parts must cover all triangles")
        if not self.parts:
            raise ValueError("mesh needs at least one part")

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    def part_mesh(self, index: int) -> "Mesh":
        """Sub-mesh of one part, with vertices compacted."""
        p = self.parts[index]
        tris = self.triangles[p.start:p.end]
        used, inverse = np.unique(tris.ravel(), return_inverse=True)
        verts = self.vertices[used]
        normals = self.normals[used] if self.normals is not None else None
        return Mesh(verts, inverse.reshape(-1, 3), normals=normals, parts=[MeshPart(p.name, 0, len(tris))])

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        if self.parts != other.parts:
            return False
        if not np.array_equal(self.vertices, other.vertices):
            return False
        if not np.array_equal(self.triangles, other.triangles):
            return False
        if (self.normals is None) != (other.normals is None):
            return False
        if self.normals is not None and not np.array_equal(self.normals, other.normals):
            return False
        return True

    def __repr__(self):
        return f"Mesh({self.vertex_count} vertices, {self.triangle_count} triangles, {len(self.parts)} parts)"


class MaterialPreset(str, Enum):
    DEFAULT = "default"
    GLASS = "glass"
    BRICK = "brick"


GLASS_MAX_OPACITY = 0.5


@dataclass(frozen=True)
class Material:
    preset: MaterialPreset = MaterialPreset.DEFAULT
    opacity: float = 1.0
    base_color: tuple[float, float, float] = (0.8, 0.8, 0.8)

    def __post_init__(self):
        object.__setattr__(self, "opacity", min(1.0, max(0.0, self.opacity)))
        if self.preset is MaterialPreset.GLASS and self.opacity > GLASS_MAX_OPACITY:
            object.__setattr__(self, "opacity", GLASS_MAX_OPACITY)
        color = tuple(min(1.0, max(0.0, float(c))) for c in self.base_color)
        object.__setattr__(self, "base_color", color)


@dataclass(frozen=True)
class SceneObject:
    id: int
    name: str
    transform: Transform
    mesh_id: int
    active_part: Optional[int] = None
    material: Material = field(default_factory=Material)
    grab_owner: Optional[int] = None


class Scene:
    """Authoritative object/mesh registry.

    Every mutator bumps ``revision`` by exactly one; only the session
    sequencer may call mutators. Reads hand out immutable values, so
    snapshots are safe to share across threads.
    """

    def __init__(self):
        self.objects: dict[int, SceneObject] = {}
        self.meshes: dict[int, Mesh] = {}
        self.revision: int = 0
        self._next_object_id = 1
        self._next_mesh_id = 1

    def allocate_mesh_id(self) -> int:
        mid = self._next_mesh_id
        self._next_mesh_id += 1
        return mid

    def add_mesh(self, mesh: Mesh, mesh_id: Optional[int] = None) -> int:
        """Register a mesh. Not a scene mutation: meshes are immutable assets."""
        mid = mesh_id if mesh_id is not None else self.allocate_mesh_id()
        self._next_mesh_id = max(self._next_mesh_id, mid + 1)
        self.meshes[mid] = mesh
        return mid

    def add_object(
        self,
        name: str,
        transform: Transform,
        mesh_id: int,
        active_part: Optional[int] = None,
        material: Optional[Material] = None,
        object_id: Optional[int] = None,
    ) -> SceneObject:
        if mesh_id not in self.meshes:
            raise SceneError(f"mesh id {mesh_id} not registered")
        oid = object_id if object_id is not None else self._next_object_id
        if oid in self.objects:
            raise SceneError(f"object id {oid} already present")
        self._next_object_id = max(self._next_object_id, oid + 1)
        obj = SceneObject(
            id=oid,
            name=name,
            transform=transform,
            mesh_id=mesh_id,
            active_part=active_part,
            material=material if material is not None else Material(),
        )
        self.objects[oid] = obj
        self.revision += 1
        return obj

    def get(self, object_id: int) -> SceneObject:
        try:
            return self.objects[object_id]
        except KeyError:
            raise UnknownObject(object_id) from None

    def set_transform(self, object_id: int, transform: Transform) -> SceneObject:
        obj = replace(self.get(object_id), transform=transform)
        self.objects[object_id] = obj
        self.revision += 1
        return obj

    def set_material(self, object_id: int, material: Material) -> SceneObject:
        obj = replace(self.get(object_id), material=material)
        self.objects[object_id] = obj
        self.revision += 1
        return obj

    def set_grab_owner(self, object_id: int, owner: Optional[int]) -> SceneObject:
        obj = replace(self.get(object_id), grab_owner=owner)
        self.objects[object_id] = obj
        self.revision += 1
        return obj

    def touch(self) -> None:
        """Count a session-document mutation tracked outside the object table
        (e.g. the shared image-stack panel) in the same revision sequence."""
        self.revision += 1
