"""Wavefront OBJ and STL (binary + ASCII) reading and writing.

The OBJ subset is v/vn/f/o/g plus comments; texture coordinates and material
libraries are skipped with a counted warning. STL vertices are deduplicated
by exact bit equality, which keeps parsing deterministic and order
independent. Writers satisfy parse(write(m)) == m on the triangle multiset
(STL may reorder vertices and quantizes coordinates to 32-bit floats).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .core import Mesh, MeshPart

__all__ = [
    "MeshFormat",
    "MeshIOError",
    "UnknownFormat",
    "TruncatedFile",
    "MeshSyntaxError",
    "MeshIndexError",
    "ObjWarnings",
    "detect_format",
    "parse_obj",
    "parse_stl",
    "parse_mesh",
    "write_obj",
    "write_stl",
]

STL_HEADER_BYTES = 84
STL_RECORD_BYTES = 50

# 12 little-endian float32 (normal + 3 corners) + 2-byte attribute, packed
_STL_RECORD_DTYPE = np.dtype([("data", "<f4", 12), ("attr", "<u2")])
assert _STL_RECORD_DTYPE.itemsize == STL_RECORD_BYTES


class MeshIOError(Exception):
    pass


class UnknownFormat(MeshIOError):
    pass


class TruncatedFile(MeshIOError):
    pass


class MeshSyntaxError(MeshIOError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MeshIndexError(MeshIOError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MeshFormat(Enum):
    OBJ_TEXT = "obj"
    STL_BINARY = "stl-binary"
    STL_ASCII = "stl-ascii"


@dataclass
class ObjWarnings:
    """Counts of skipped OBJ directives, for UI reporting."""

    ignored: dict[str, int] = field(default_factory=dict)

    def count(self, directive: str):
        self.ignored[directive] = self.ignored.get(directive, 0) + 1

    @property
    def total(self) -> int:
        return sum(self.ignored.values())


def _looks_like_ascii_stl(data: bytes) -> bool:
    head = data.lstrip()[:5]
    return head == b"solid" and b"facet" in data


def detect_format(data: bytes) -> MeshFormat:
    if len(data) < 6:
        raise UnknownFormat("need at least 6 bytes")
    if _looks_like_ascii_stl(data):
        return MeshFormat.STL_ASCII
    if len(data) >= STL_HEADER_BYTES:
        (n,) = struct.unpack_from("<I", data, 80)
        if len(data) == STL_HEADER_BYTES + STL_RECORD_BYTES * n:
            return MeshFormat.STL_BINARY
    for line in data.splitlines():
        if line.startswith(b"v ") or line.startswith(b"v\t"):
            return MeshFormat.OBJ_TEXT
    raise UnknownFormat("no detection rule matched")


# --------------------------------------------------------------------- OBJ

_OBJ_KEPT = ("v", "vn", "f", "o", "g")


def _parse_floats(fields: list[str], lineno: int, want: int) -> list[float]:
    if len(fields) < want:
        raise MeshSyntaxError(lineno, f"expected {want} numeric fields, got {len(fields)}")
    out = []
    for tok in fields[:want]:
        try:
            out.append(float(tok))
        except ValueError:
            raise MeshSyntaxError(lineno, f"bad numeric field {tok!r}") from None
    return out


def _resolve_index(token: str, count: int, lineno: int, what: str) -> int:
    try:
        idx = int(token)
    except ValueError:
        raise MeshSyntaxError(lineno, f"bad {what} index {token!r}") from None
    if idx > 0:
        zero = idx - 1
    elif idx < 0:
        zero = count + idx
    else:
        raise MeshIndexError(lineno, f"{what} index 0 is not valid")
    if not (0 <= zero < count):
        raise MeshIndexError(lineno, f"{what} index {idx} out of range (have {count})")
    return zero


def parse_obj(text: str, warnings: Optional[ObjWarnings] = None) -> Mesh:
    """Parse OBJ text into a Mesh, fan-triangulating faces with >3 corners."""
    warnings = warnings if warnings is not None else ObjWarnings()
    vertices: list[tuple[float, float, float]] = []
    normals: list[tuple[float, float, float]] = []
    triangles: list[tuple[int, int, int]] = []
    tri_normal_refs: list[tuple[int, int, int]] = []
    saw_normal_ref = False

    part_bounds: list[tuple[str, int]] = []  # (name, first triangle index)
    pending_name: Optional[str] = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        key = fields[0]
        if key == "v":
            x, y, z = _parse_floats(fields[1:], lineno, 3)
            vertices.append((x, y, z))
        elif key == "vn":
            x, y, z = _parse_floats(fields[1:], lineno, 3)
            normals.append((x, y, z))
        elif key in ("o", "g"):
            pending_name = " ".join(fields[1:]) or "default"
        elif key == "f":
            corners = fields[1:]
            if len(corners) < 3:
                raise MeshSyntaxError(lineno, "face needs at least 3 vertices")
            vidx = []
            nidx = []
            for tok in corners:
                pieces = tok.split("/")
                vidx.append(_resolve_index(pieces[0], len(vertices), lineno, "vertex"))
                if len(pieces) >= 3 and pieces[2]:
                    nidx.append(_resolve_index(pieces[2], len(normals), lineno, "normal"))
                    saw_normal_ref = True
                else:
                    nidx.append(-1)
            if pending_name is not None:
                part_bounds.append((pending_name, len(triangles)))
                pending_name = None
            elif not part_bounds:
                part_bounds.append(("default", 0))
            for i in range(1, len(vidx) - 1):
                triangles.append((vidx[0], vidx[i], vidx[i + 1]))
                tri_normal_refs.append((nidx[0], nidx[i], nidx[i + 1]))
        else:
            warnings.count(key)

    verts = np.array(vertices, dtype=np.float64).reshape(-1, 3)
    tris = np.array(triangles, dtype=np.int64).reshape(-1, 3)

    vertex_normals = None
    if saw_normal_ref:
        vertex_normals = np.zeros_like(verts)
        refs = np.array(tri_normal_refs, dtype=np.int64).reshape(-1, 3)
        nrm = np.array(normals, dtype=np.float64).reshape(-1, 3)
        mask = refs >= 0
        vertex_normals[tris[mask]] = nrm[refs[mask]]
    elif normals and len(normals) == len(vertices):
        # unreferenced vn block aligned with the vertex list
        vertex_normals = np.array(normals, dtype=np.float64)
    elif normals:
        warnings.count("vn(unreferenced)")

    parts = _bounds_to_parts(part_bounds, len(tris))
    return Mesh(verts, tris, normals=vertex_normals, parts=parts)


def _bounds_to_parts(bounds: list[tuple[str, int]], n_triangles: int) -> list[MeshPart]:
    if not bounds:
        return [MeshPart("default", 0, n_triangles)]
    parts = []
    for i, (name, start) in enumerate(bounds):
        end = bounds[i + 1][1] if i + 1 < len(bounds) else n_triangles
        if end > start:
            parts.append(MeshPart(name, start, end))
    if not parts:
        parts = [MeshPart(bounds[0][0], 0, n_triangles)]
    return parts


def write_obj(mesh: Mesh) -> str:
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
    has_normals = mesh.normals is not None
    if has_normals:
        for n in mesh.normals:
            lines.append(f"vn {float(n[0])!r} {float(n[1])!r} {float(n[2])!r}")
    for part in mesh.parts:
        lines.append(f"o {part.name}")
        for tri in mesh.triangles[part.start:part.end]:
            a, b, c = (int(i) + 1 for i in tri)
            if has_normals:
                lines.append(f"f {a}//{a} {b}//{b} {c}//{c}")
            else:
                lines.append(f"f {a} {b} {c}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------- STL

def _dedup_rows(corners: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bitwise row dedup, keeping first-encounter order.

    Returns (unique_rows, index_per_input_row).
    """
    corners = np.ascontiguousarray(corners)
    if len(corners) == 0:
        return corners.reshape(0, 3), np.zeros(0, dtype=np.int64)
    records = corners.view(np.dtype((np.void, corners.dtype.itemsize * 3))).ravel()
    _, first, inverse = np.unique(records, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return corners[first[order]], rank[inverse.ravel()]


def _stl_header_name(header: bytes) -> str:
    text = header.split(b"\0", 1)[0].decode("ascii", errors="ignore").strip()
    if text.startswith("solid"):
        text = text[len("solid"):].strip()
    return text or "default"


def parse_stl(data: bytes, fmt: Optional[MeshFormat] = None) -> Mesh:
    if fmt is None:
        fmt = detect_format(data)
    if fmt is MeshFormat.STL_ASCII:
        return _parse_stl_ascii(data)
    if fmt is not MeshFormat.STL_BINARY:
        raise UnknownFormat(f"not an STL payload: {fmt}")

    if len(data) < STL_HEADER_BYTES:
        raise TruncatedFile(f"binary STL needs {STL_HEADER_BYTES} header bytes, got {len(data)}")
    (n,) = struct.unpack_from("<I", data, 80)
    expected = STL_HEADER_BYTES + STL_RECORD_BYTES * n
    if len(data) != expected:
        raise TruncatedFile(f"expected {expected} bytes for {n} triangles, got {len(data)}")

    name = _stl_header_name(data[:80])
    records = np.frombuffer(data, dtype=_STL_RECORD_DTYPE, count=n, offset=STL_HEADER_BYTES)
    corners = records["data"][:, 3:].reshape(-1, 3)  # drop per-facet normal
    unique, index = _dedup_rows(corners)
    verts = unique.astype(np.float64).reshape(-1, 3)
    tris = index.reshape(-1, 3)
    return Mesh(verts, tris, parts=[MeshPart(name, 0, len(tris))])


def _parse_stl_ascii(data: bytes) -> Mesh:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise MeshSyntaxError(0, f"not valid UTF-8: {e}") from None
    name = "default"
    corners: list[tuple[float, float, float]] = []
    in_loop = False
    loop_count = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        fields = raw.split()
        if not fields:
            continue
        key = fields[0].lower()
        if key == "solid":
            name = " ".join(fields[1:]) or "default"
        elif key == "facet" or key == "endfacet":
            continue
        elif key == "outer":
            in_loop = True
            loop_count = 0
        elif key == "endloop":
            if loop_count != 3:
                raise MeshSyntaxError(lineno, f"facet loop has {loop_count} vertices, need 3")
            in_loop = False
        elif key == "vertex":
            if not in_loop:
                raise MeshSyntaxError(lineno, "vertex outside outer loop")
            x, y, z = _parse_floats(fields[1:], lineno, 3)
            corners.append((x, y, z))
            loop_count += 1
        elif key == "endsolid":
            break
        else:
            raise MeshSyntaxError(lineno, f"unexpected token {fields[0]!r}")
    if in_loop:
        raise MeshSyntaxError(len(text.splitlines()), "unterminated vertex loop")
    if len(corners) % 3 != 0:
        raise MeshSyntaxError(len(text.splitlines()), "dangling vertices outside a complete facet")
    arr = np.array(corners, dtype=np.float64).reshape(-1, 3)
    unique, index = _dedup_rows(arr)
    return Mesh(unique.reshape(-1, 3), index.reshape(-1, 3), parts=[MeshPart(name, 0, len(index) // 3)])


def _facet_normals(mesh: Mesh) -> np.ndarray:
    tri = mesh.vertices[mesh.triangles]
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    lengths = np.linalg.norm(n, axis=1)
    ok = lengths > 0
    n[ok] /= lengths[ok, None]
    n[~ok] = 0.0
    return n


def write_stl(mesh: Mesh, fmt: MeshFormat = MeshFormat.STL_BINARY) -> bytes:
    if fmt is MeshFormat.STL_BINARY:
        name = mesh.parts[0].name if mesh.parts else "default"
        header = name.encode("ascii", errors="replace")[:80].ljust(80, b"\0")
        records = np.zeros(mesh.triangle_count, dtype=_STL_RECORD_DTYPE)
        records["data"][:, :3] = _facet_normals(mesh).astype(np.float32)
        records["data"][:, 3:] = mesh.vertices[mesh.triangles].reshape(-1, 9).astype(np.float32)
        return header + struct.pack("<I", mesh.triangle_count) + records.tobytes()
    if fmt is MeshFormat.STL_ASCII:
        name = mesh.parts[0].name if mesh.parts else "default"
        normals = _facet_normals(mesh)
        lines = [f"solid {name}"]
        for tri, n in zip(mesh.triangles, normals):
            lines.append(f"  facet normal {float(n[0])!r} {float(n[1])!r} {float(n[2])!r}")
            lines.append("    outer loop")
            for vi in tri:
                v = mesh.vertices[vi]
                lines.append(f"      vertex {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
            lines.append("    endloop")
            lines.append("  endfacet")
        lines.append(f"endsolid {name}")
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise UnknownFormat(f"cannot write format {fmt}")


def parse_mesh(data: bytes, warnings: Optional[ObjWarnings] = None) -> Mesh:
    """Detect the format and parse accordingly."""
    fmt = detect_format(data)
    if fmt is MeshFormat.OBJ_TEXT:
        return parse_obj(data.decode("utf-8"), warnings=warnings)
    return parse_stl(data, fmt)
