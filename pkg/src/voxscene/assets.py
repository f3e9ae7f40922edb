"""Asset catalog: the files a session can import.

*.obj / *.stl anywhere under the root are mesh assets; a directory holding
at least one .png and no subdirectories is an image stack. Entries are
named by their root-relative POSIX path and listed lexicographically, so a
scan over an unchanged tree is deterministic.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

from .meshio import MeshFormat, ObjWarnings, _looks_like_ascii_stl, parse_obj, parse_stl
from .protocol import AssetInfo
from .volume import Volume, load_stack_dir

__all__ = ["AssetKind", "AssetEntry", "AssetNotFound", "RootNotFound", "scan_assets", "AssetStore"]


class AssetNotFound(Exception):
    pass


class RootNotFound(Exception):
    pass


class AssetKind(Enum):
    MESH_OBJ = "mesh-obj"
    MESH_STL = "mesh-stl"
    IMAGE_STACK = "image-stack"


@dataclass(frozen=True)
class AssetEntry:
    name: str            # root-relative POSIX path
    kind: AssetKind
    size_bytes: int
    slice_count: Optional[int] = None  # stacks only

    def to_info(self) -> AssetInfo:
        return AssetInfo(name=self.name, kind=self.kind.value, size=self.size_bytes, slices=self.slice_count)


def scan_assets(root) -> list[AssetEntry]:
    root = Path(root)
    if not root.is_dir():
        raise RootNotFound(f"assets root not found: {root}")
    entries: list[AssetEntry] = []
    for dirpath, dirnames, _ in os.walk(root):
        dirnames.sort()
        with os.scandir(dirpath) as it:
            children = sorted(it, key=lambda e: e.name)
        has_subdir = any(c.is_dir() for c in children)
        pngs = [c for c in children if c.is_file() and c.name.lower().endswith(".png")]
        rel_dir = Path(dirpath).relative_to(root).as_posix()
        if pngs and not has_subdir and rel_dir != ".":
            size = sum(c.stat().st_size for c in pngs)
            entries.append(AssetEntry(rel_dir, AssetKind.IMAGE_STACK, size, slice_count=len(pngs)))
        for c in children:
            if not c.is_file():
                continue
            lower = c.name.lower()
            rel = c.name if rel_dir == "." else f"{rel_dir}/{c.name}"
            if lower.endswith(".obj"):
                entries.append(AssetEntry(rel, AssetKind.MESH_OBJ, c.stat().st_size))
            elif lower.endswith(".stl"):
                entries.append(AssetEntry(rel, AssetKind.MESH_STL, c.stat().st_size))
    entries.sort(key=lambda e: e.name)
    return entries


class AssetStore:
    """Filesystem-backed asset access for a session.

    Loaded stacks are cached: assets are treated as immutable while the
    server runs. The catalog itself is rescanned on every request so newly
    dropped files show up.
    """

    def __init__(self, root):
        self.root = Path(root)
        if not self.root.is_dir():
            raise RootNotFound(f"assets root not found: {self.root}")
        self._stack_cache: dict[str, Volume] = {}

    def catalog(self) -> list[AssetEntry]:
        return scan_assets(self.root)

    def _resolve(self, name: str) -> Path:
        path = (self.root / name).resolve()
        if not str(path).startswith(str(self.root.resolve())):
            raise AssetNotFound(f"asset name escapes the root: {name}")
        return path

    def load_mesh(self, name: str, warnings: Optional[ObjWarnings] = None):
        path = self._resolve(name)
        if not path.is_file() or path.suffix.lower() not in (".obj", ".stl"):
            raise AssetNotFound(name)
        data = path.read_bytes()
        if path.suffix.lower() == ".obj":
            return parse_obj(data.decode("utf-8"), warnings=warnings)
        # .stl: honor the extension so a corrupt file reports the STL error
        if _looks_like_ascii_stl(data):
            return parse_stl(data, MeshFormat.STL_ASCII)
        return parse_stl(data, MeshFormat.STL_BINARY)

    def load_stack(self, name: str) -> Volume:
        if name in self._stack_cache:
            return self._stack_cache[name]
        path = self._resolve(name)
        if not path.is_dir():
            raise AssetNotFound(name)
        volume = load_stack_dir(path)
        self._stack_cache[name] = volume
        return volume
