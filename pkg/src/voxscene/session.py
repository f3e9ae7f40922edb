"""Authoritative session sequencer and the matching client-side replica.

One Session owns one Scene. Operations are applied strictly in the order
they reach `apply`; every state mutation bumps the revision by exactly one
and emits exactly one broadcast event, so the broadcast stream carries the
gap-free revision sequence 1..R and replaying it (or a snapshot plus the
tail) reconstructs the document bit for bit. Rejections go only to the
originator and change nothing. Avatar poses are presence, not document
state: they are broadcast but unrevisioned.
"""

from __future__ import annotations

import base64
import io
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import interaction, protocol
from .assets import AssetNotFound
from .core import MaterialPreset, Scene, SceneObject, Transform, UnknownObject, Vec3
from .interaction import AlreadyGrabbed, DegenerateGesture, GrabState, Ray
from .meshio import MeshIOError
from .protocol import (
    AssetCatalog,
    AssetInfo,
    AvatarMoved,
    AvatarState,
    GrabChanged,
    MaterialChanged,
    ObjectAdded,
    ObjectState,
    OpRejected,
    PartRef,
    QuantifyResult,
    SceneSnapshot,
    SliceChanged,
    StackState,
    TransformChanged,
    Welcome,
)
from .quantify import mesh_report
from .volume import Volume, get_slice

__all__ = ["Delivery", "Session", "Replica"]

SPAWN_FORWARD = Vec3(0.0, 0.0, -1.0)   # spawn at origin facing -z
IMPORT_DISTANCE = 1.5
IMPORT_HEIGHT = 1.0


@dataclass(frozen=True)
class Delivery:
    """One outbound event: to a specific client id, or broadcast when None."""

    event: object
    to: Optional[int] = None


def _slice_png_b64(volume: Volume, index: int) -> str:
    from PIL import Image

    plane = get_slice(volume, index).data
    img = Image.fromarray((plane * 255.0 + 0.5).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


class Session:
    """Single sequencer for one collaborative scene."""

    def __init__(self, assets=None, floor_height: float = 0.0, recenter_imports: bool = False):
        self.scene = Scene()
        self.assets = assets
        self.floor_height = floor_height
        self.recenter_imports = recenter_imports
        self.clients: dict[int, str] = {}
        self.avatars: dict[int, AvatarState] = {}
        self.grabs: dict[int, GrabState] = {}          # object id -> lock
        self.stack: Optional[StackState] = None
        self.stack_volume: Optional[Volume] = None
        self.last_seq: dict[int, int] = {}
        self._next_client_id = 1
        self._slice_png_cache: dict[tuple[str, int], str] = {}

    # ------------------------------------------------------------ lifecycle

    def connect(self, name: str) -> tuple[int, list[Delivery]]:
        cid = self._next_client_id
        self._next_client_id += 1
        self.clients[cid] = name
        self.avatars[cid] = AvatarState(client=cid)
        out = [
            Delivery(Welcome(rev=self.scene.revision, origin=cid, client=cid), to=cid),
            Delivery(self.snapshot(origin=cid), to=cid),
            Delivery(AssetCatalog(rev=self.scene.revision, origin=cid, entries=self._catalog()), to=cid),
            Delivery(AvatarMoved(rev=self.scene.revision, origin=cid, client=cid)),
        ]
        return cid, out

    def disconnect(self, client_id: int) -> list[Delivery]:
        out: list[Delivery] = []
        if client_id not in self.clients:
            return out
        held = [oid for oid, g in self.grabs.items() if g.client_id == client_id]
        for oid in held:
            del self.grabs[oid]
            if oid in self.scene.objects:
                self.scene.set_grab_owner(oid, None)
                out.append(Delivery(GrabChanged(
                    rev=self.scene.revision, origin=client_id, object=oid, owner=None)))
        del self.clients[client_id]
        self.avatars.pop(client_id, None)
        self.last_seq.pop(client_id, None)
        out.append(Delivery(AvatarMoved(
            rev=self.scene.revision, origin=client_id, client=client_id, gone=True)))
        return out

    # ------------------------------------------------------------ snapshots

    def _object_state(self, obj: SceneObject) -> ObjectState:
        part = None
        if obj.active_part is not None:
            p = self.scene.meshes[obj.mesh_id].parts[obj.active_part]
            part = PartRef(index=obj.active_part, name=p.name, start=p.start, end=p.end)
        return ObjectState(
            id=obj.id,
            name=obj.name,
            mesh=obj.mesh_id,
            transform=obj.transform,
            material=obj.material,
            grab_owner=obj.grab_owner,
            part=part,
        )

    def snapshot(self, origin: int = 0) -> SceneSnapshot:
        return SceneSnapshot(
            rev=self.scene.revision,
            origin=origin,
            objects=[self._object_state(o) for _, o in sorted(self.scene.objects.items())],
            stack=self.stack,
            avatars=[self.avatars[c] for c in sorted(self.avatars)],
        )

    def document(self):
        """Canonical replicated state, comparable against Replica.document()."""
        objects = {oid: self._object_state(o) for oid, o in self.scene.objects.items()}
        return (self.scene.revision, objects, self.stack)

    def _catalog(self) -> list[AssetInfo]:
        if self.assets is None:
            return []
        return [e.to_info() for e in self.assets.catalog()]

    # ------------------------------------------------------------ sequencer

    def apply(self, client_id: int, op) -> list[Delivery]:
        """Apply one client op in arrival order; returns deliveries to send."""
        if client_id not in self.clients:
            return []
        seq = getattr(op, "seq", 0)
        if seq <= self.last_seq.get(client_id, 0):
            return self._reject(client_id, seq, "BadPayload", "client seq must strictly increase")
        self.last_seq[client_id] = seq

        handler = self._HANDLERS.get(type(op))
        if handler is None:
            return self._reject(client_id, seq, "BadPayload", f"unhandled op {type(op).__name__}")
        return handler(self, client_id, op)

    def _reject(self, client_id: int, seq: int, reason: str, detail: str = "") -> list[Delivery]:
        ev = OpRejected(rev=self.scene.revision, origin=client_id, seq=seq, reason=reason, detail=detail)
        return [Delivery(ev, to=client_id)]

    # --- asset ops

    def _op_list_assets(self, cid: int, op: protocol.ListAssets) -> list[Delivery]:
        return [Delivery(AssetCatalog(rev=self.scene.revision, origin=cid, entries=self._catalog()), to=cid)]

    def add_imported_mesh(self, mesh, name: str, origin_client: int = 0) -> list[Delivery]:
        """Register a parsed mesh and create one object per part."""
        mesh_id = self.scene.add_mesh(mesh)
        base = Transform()
        if self.recenter_imports and mesh.vertex_count:
            center = (mesh.vertices.min(axis=0) + mesh.vertices.max(axis=0)) / 2.0
            target = SPAWN_FORWARD.scaled(IMPORT_DISTANCE) + Vec3(0.0, IMPORT_HEIGHT, 0.0)
            base = Transform(position=target - Vec3.from_array(center))
        out = []
        for part_index in range(len(mesh.parts)):
            part = mesh.parts[part_index]
            obj = self.scene.add_object(
                name=f"{name}/{part.name}" if len(mesh.parts) > 1 else name,
                transform=base,
                mesh_id=mesh_id,
                active_part=part_index,
            )
            out.append(Delivery(ObjectAdded(
                rev=self.scene.revision, origin=origin_client, object=self._object_state(obj))))
        return out

    def _op_import_asset(self, cid: int, op: protocol.ImportAsset) -> list[Delivery]:
        if self.assets is None:
            return self._reject(cid, op.seq, "AssetNotFound", "no asset store attached")
        try:
            mesh = self.assets.load_mesh(op.name)
        except AssetNotFound as e:
            return self._reject(cid, op.seq, "AssetNotFound", str(e))
        except MeshIOError as e:
            return self._reject(cid, op.seq, "BadPayload", f"{type(e).__name__}: {e}")
        return self.add_imported_mesh(mesh, op.name, origin_client=cid)

    def _op_import_stack(self, cid: int, op: protocol.ImportStack) -> list[Delivery]:
        if self.assets is None:
            return self._reject(cid, op.seq, "AssetNotFound", "no asset store attached")
        try:
            volume = self.assets.load_stack(op.name)
        except AssetNotFound as e:
            return self._reject(cid, op.seq, "AssetNotFound", str(e))
        except Exception as e:
            return self._reject(cid, op.seq, "BadPayload", f"{type(e).__name__}: {e}")
        nz = volume.dims[2]
        self.stack_volume = volume
        self.stack = StackState(name=op.name, index=0, count=nz)
        self.scene.touch()
        return [Delivery(SliceChanged(
            rev=self.scene.revision, origin=cid, stack=op.name, index=0, count=nz,
            png_b64=self._slice_png(op.name, 0)))]

    def _slice_png(self, name: str, index: int) -> str:
        key = (name, index)
        if key not in self._slice_png_cache:
            self._slice_png_cache[key] = _slice_png_b64(self.stack_volume, index)
        return self._slice_png_cache[key]

    def _op_select_slice(self, cid: int, op: protocol.SelectSlice) -> list[Delivery]:
        if self.stack is None or self.stack_volume is None:
            return self._reject(cid, op.seq, "BadPayload", "no image stack open")
        if not (0 <= op.index < self.stack.count):
            return self._reject(cid, op.seq, "BadPayload",
                                f"slice {op.index} outside [0, {self.stack.count})")
        self.stack = replace(self.stack, index=op.index)
        self.scene.touch()
        return [Delivery(SliceChanged(
            rev=self.scene.revision, origin=cid, stack=self.stack.name, index=op.index,
            count=self.stack.count, png_b64=self._slice_png(self.stack.name, op.index)))]

    # --- grab ops

    def _op_grab_acquire(self, cid: int, op: protocol.GrabAcquire) -> list[Delivery]:
        try:
            grab = interaction.grab_acquire(self.scene, cid, op.object, op.hand)
        except UnknownObject as e:
            return self._reject(cid, op.seq, "UnknownObject", str(e))
        except AlreadyGrabbed as e:
            return self._reject(cid, op.seq, "AlreadyGrabbed", str(e))
        self.grabs[op.object] = grab
        return [Delivery(GrabChanged(rev=self.scene.revision, origin=cid, object=op.object, owner=cid))]

    def _require_lock(self, cid: int, object_id: int) -> Optional[GrabState]:
        grab = self.grabs.get(object_id)
        if grab is None or grab.client_id != cid:
            return None
        return grab

    def _op_grab_move(self, cid: int, op: protocol.GrabMove) -> list[Delivery]:
        grab = self._require_lock(cid, op.object)
        if grab is None:
            return self._reject(cid, op.seq, "NotGrabOwner", f"object {op.object}")
        transform = interaction.grab_update(self.scene, grab, op.hand)
        return [Delivery(TransformChanged(
            rev=self.scene.revision, origin=cid, object=op.object, transform=transform))]

    def _op_grab_release(self, cid: int, op: protocol.GrabRelease) -> list[Delivery]:
        grab = self._require_lock(cid, op.object)
        if grab is None:
            return self._reject(cid, op.seq, "NotGrabOwner", f"object {op.object}")
        del self.grabs[op.object]
        interaction.grab_release(self.scene, grab)
        return [Delivery(GrabChanged(rev=self.scene.revision, origin=cid, object=op.object, owner=None))]

    # --- manipulation ops

    def _op_push_pull(self, cid: int, op: protocol.PushPull) -> list[Delivery]:
        if self._require_lock(cid, op.object) is None:
            return self._reject(cid, op.seq, "NotGrabOwner", f"object {op.object}")
        try:
            ray = Ray(op.origin, op.direction)
        except ValueError as e:
            return self._reject(cid, op.seq, "BadPayload", str(e))
        transform = interaction.push_pull(self.scene, op.object, ray, op.delta)
        return [Delivery(TransformChanged(
            rev=self.scene.revision, origin=cid, object=op.object, transform=transform))]

    def _op_resize(self, cid: int, op: protocol.Resize) -> list[Delivery]:
        if self._require_lock(cid, op.object) is None:
            return self._reject(cid, op.seq, "NotGrabOwner", f"object {op.object}")
        try:
            transform = interaction.two_hand_resize(self.scene, op.object, op.d0, op.d1)
        except DegenerateGesture as e:
            return self._reject(cid, op.seq, "BadPayload", str(e))
        return [Delivery(TransformChanged(
            rev=self.scene.revision, origin=cid, object=op.object, transform=transform))]

    def _op_set_material(self, cid: int, op: protocol.SetMaterial) -> list[Delivery]:
        try:
            preset = MaterialPreset(op.preset)
        except ValueError:
            return self._reject(cid, op.seq, "BadPayload", f"unknown preset {op.preset!r}")
        try:
            material = interaction.set_material(self.scene, op.object, preset, op.opacity)
        except UnknownObject as e:
            return self._reject(cid, op.seq, "UnknownObject", str(e))
        return [Delivery(MaterialChanged(
            rev=self.scene.revision, origin=cid, object=op.object, material=material))]

    def _op_set_opacity(self, cid: int, op: protocol.SetOpacity) -> list[Delivery]:
        try:
            obj = self.scene.get(op.object)
        except UnknownObject as e:
            return self._reject(cid, op.seq, "UnknownObject", str(e))
        material = interaction.set_material(self.scene, op.object, obj.material.preset, op.opacity)
        return [Delivery(MaterialChanged(
            rev=self.scene.revision, origin=cid, object=op.object, material=material))]

    # --- presence ops

    def _op_avatar_pose(self, cid: int, op: protocol.AvatarPose) -> list[Delivery]:
        self.avatars[cid] = AvatarState(client=cid, head=op.head, left=op.left, right=op.right)
        return [Delivery(AvatarMoved(
            rev=self.scene.revision, origin=cid, client=cid,
            head=op.head, left=op.left, right=op.right))]

    def _op_teleport(self, cid: int, op: protocol.Teleport) -> list[Delivery]:
        try:
            ray = Ray(op.origin, op.direction)
        except ValueError as e:
            return self._reject(cid, op.seq, "BadPayload", str(e))
        target = interaction.teleport_target(ray, self.floor_height, op.max_range)
        if target is None:
            return self._reject(cid, op.seq, "BadPayload", "no floor target for that ray")
        avatar = self.avatars[cid]
        head = Transform(
            position=Vec3(target.x, avatar.head.position.y, target.z),
            rotation=avatar.head.rotation,
            scale=avatar.head.scale,
        )
        self.avatars[cid] = replace(avatar, head=head)
        return [Delivery(AvatarMoved(
            rev=self.scene.revision, origin=cid, client=cid,
            head=head, left=avatar.left, right=avatar.right))]

    # --- queries

    def _op_request_quantify(self, cid: int, op: protocol.RequestQuantify) -> list[Delivery]:
        try:
            obj = self.scene.get(op.object)
        except UnknownObject as e:
            return self._reject(cid, op.seq, "UnknownObject", str(e))
        mesh = self.scene.meshes[obj.mesh_id]
        if obj.active_part is not None and len(mesh.parts) > 1:
            mesh = mesh.part_mesh(obj.active_part)
        report = mesh_report(mesh).to_dict()
        return [Delivery(QuantifyResult(
            rev=self.scene.revision, origin=cid, object=op.object, report=report), to=cid)]

    _HANDLERS = {
        protocol.ListAssets: _op_list_assets,
        protocol.ImportAsset: _op_import_asset,
        protocol.ImportStack: _op_import_stack,
        protocol.SelectSlice: _op_select_slice,
        protocol.GrabAcquire: _op_grab_acquire,
        protocol.GrabMove: _op_grab_move,
        protocol.GrabRelease: _op_grab_release,
        protocol.PushPull: _op_push_pull,
        protocol.Resize: _op_resize,
        protocol.SetMaterial: _op_set_material,
        protocol.SetOpacity: _op_set_opacity,
        protocol.AvatarPose: _op_avatar_pose,
        protocol.Teleport: _op_teleport,
        protocol.RequestQuantify: _op_request_quantify,
    }


class Replica:
    """Client-side document reconstruction from the broadcast event stream."""

    def __init__(self):
        self.revision = 0
        self.objects: dict[int, ObjectState] = {}
        self.stack: Optional[StackState] = None
        self.avatars: dict[int, AvatarState] = {}

    def apply_event(self, ev) -> None:
        if isinstance(ev, SceneSnapshot):
            self.revision = ev.rev
            self.objects = {o.id: o for o in ev.objects}
            self.stack = ev.stack
            self.avatars = {a.client: a for a in ev.avatars}
        elif isinstance(ev, ObjectAdded):
            self.objects[ev.object.id] = ev.object
            self.revision = ev.rev
        elif isinstance(ev, TransformChanged):
            if ev.object in self.objects:  # unknown under lossy delivery; snapshot resyncs
                self.objects[ev.object] = replace(self.objects[ev.object], transform=ev.transform)
            self.revision = ev.rev
        elif isinstance(ev, MaterialChanged):
            if ev.object in self.objects:
                self.objects[ev.object] = replace(self.objects[ev.object], material=ev.material)
            self.revision = ev.rev
        elif isinstance(ev, GrabChanged):
            if ev.object in self.objects:
                self.objects[ev.object] = replace(self.objects[ev.object], grab_owner=ev.owner)
            self.revision = ev.rev
        elif isinstance(ev, SliceChanged):
            self.stack = StackState(name=ev.stack, index=ev.index, count=ev.count)
            self.revision = ev.rev
        elif isinstance(ev, AvatarMoved):
            if ev.gone:
                self.avatars.pop(ev.client, None)
            else:
                self.avatars[ev.client] = AvatarState(
                    client=ev.client, head=ev.head, left=ev.left, right=ev.right)
        # Welcome / AssetCatalog / QuantifyResult / OpRejected carry no document state

    def document(self):
        return (self.revision, self.objects, self.stack)
