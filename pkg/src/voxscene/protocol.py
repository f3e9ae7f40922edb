"""Wire protocol for collaborative sessions.

Every message is one canonical JSON object per transport frame, UTF-8, with
"t" carrying the kind string. Client operations carry "seq" (strictly
increasing per client); server events carry "rev" (scene revision after the
event) and "origin" (the client that caused it). decode(encode(m)) == m;
unknown fields are ignored for forward compatibility, unknown kinds are an
error. Mesh geometry never rides in JSON: clients fetch it by mesh id as a
binary frame (8-byte little-endian mesh id, then STL bytes).
"""

import json
from dataclasses import MISSING, dataclass, field, fields, is_dataclass
from typing import Optional, get_args, get_origin, get_type_hints

from .core import Material, MaterialPreset, Transform, UnitQuat, Vec3

__all__ = [
    "ProtocolError",
    "MalformedMessage",
    "UnknownKind",
    "encode",
    "decode",
    "CLIENT_OP_KINDS",
    "SERVER_EVENT_KINDS",
    "REJECT_REASONS",
    # payload fragments
    "PartRef",
    "ObjectState",
    "StackState",
    "AvatarState",
    "AssetInfo",
    # client ops
    "Hello",
    "ListAssets",
    "ImportAsset",
    "ImportStack",
    "GrabAcquire",
    "GrabMove",
    "GrabRelease",
    "PushPull",
    "Resize",
    "SetMaterial",
    "SetOpacity",
    "Teleport",
    "AvatarPose",
    "SelectSlice",
    "RequestQuantify",
    "FetchMesh",
    # server events
    "Welcome",
    "SceneSnapshot",
    "ObjectAdded",
    "TransformChanged",
    "MaterialChanged",
    "GrabChanged",
    "AvatarMoved",
    "SliceChanged",
    "AssetCatalog",
    "QuantifyResult",
    "OpRejected",
    "MESH_ID_PREFIX_BYTES",
    "pack_mesh_frame",
    "unpack_mesh_frame",
]


class ProtocolError(Exception):
    pass


class MalformedMessage(ProtocolError):
    pass


class UnknownKind(ProtocolError):
    pass


REJECT_REASONS = ("NotGrabOwner", "AlreadyGrabbed", "UnknownObject", "BadPayload", "AssetNotFound")

_REGISTRY: dict[str, type] = {}
CLIENT_OP_KINDS: set[str] = set()
SERVER_EVENT_KINDS: set[str] = set()


def _message(kind: str, family: Optional[set] = None):
    def deco(cls):
        cls = dataclass(frozen=True)(cls)
        cls.kind = kind
        _REGISTRY[kind] = cls
        if family is not None:
            family.add(kind)
        return cls
    return deco


def _client_op(kind):
    return _message(kind, CLIENT_OP_KINDS)


def _server_event(kind):
    return _message(kind, SERVER_EVENT_KINDS)


# ------------------------------------------------------------- fragments

@dataclass(frozen=True)
class PartRef:
    index: int
    name: str
    start: int
    end: int


@dataclass(frozen=True)
class ObjectState:
    id: int
    name: str
    mesh: int
    transform: Transform
    material: Material
    grab_owner: Optional[int] = None
    part: Optional[PartRef] = None


@dataclass(frozen=True)
class StackState:
    name: str
    index: int
    count: int


@dataclass(frozen=True)
class AvatarState:
    client: int
    head: Transform = field(default_factory=Transform)
    left: Transform = field(default_factory=Transform)
    right: Transform = field(default_factory=Transform)


@dataclass(frozen=True)
class AssetInfo:
    name: str
    kind: str
    size: int
    slices: Optional[int] = None


# ------------------------------------------------------------- client ops

@_client_op("hello")
class Hello:
    seq: int
    name: str
    token: str = ""


@_client_op("list_assets")
class ListAssets:
    seq: int


@_client_op("import_asset")
class ImportAsset:
    seq: int
    name: str


@_client_op("import_stack")
class ImportStack:
    seq: int
    name: str


@_client_op("grab_acquire")
class GrabAcquire:
    seq: int
    object: int
    hand: Transform


@_client_op("grab_move")
class GrabMove:
    seq: int
    object: int
    hand: Transform


@_client_op("grab_release")
class GrabRelease:
    seq: int
    object: int


@_client_op("push_pull")
class PushPull:
    seq: int
    object: int
    origin: Vec3
    direction: Vec3
    delta: float


@_client_op("resize")
class Resize:
    seq: int
    object: int
    d0: float
    d1: float


@_client_op("set_material")
class SetMaterial:
    seq: int
    object: int
    preset: str
    opacity: Optional[float] = None


@_client_op("set_opacity")
class SetOpacity:
    seq: int
    object: int
    opacity: float


@_client_op("teleport")
class Teleport:
    seq: int
    origin: Vec3
    direction: Vec3
    max_range: float = 20.0


@_client_op("avatar_pose")
class AvatarPose:
    seq: int
    head: Transform
    left: Transform
    right: Transform


@_client_op("select_slice")
class SelectSlice:
    seq: int
    index: int


@_client_op("request_quantify")
class RequestQuantify:
    seq: int
    object: int


@_client_op("fetch_mesh")
class FetchMesh:
    """Side-channel mesh fetch; answered with a binary frame, not an event."""

    seq: int
    mesh: int


# ----------------------------------------------------------- server events

@_server_event("welcome")
class Welcome:
    rev: int
    origin: int
    client: int


@_server_event("scene_snapshot")
class SceneSnapshot:
    rev: int
    origin: int
    objects: list[ObjectState]
    stack: Optional[StackState] = None
    avatars: list[AvatarState] = field(default_factory=list)


@_server_event("object_added")
class ObjectAdded:
    rev: int
    origin: int
    object: ObjectState


@_server_event("transform_changed")
class TransformChanged:
    rev: int
    origin: int
    object: int
    transform: Transform


@_server_event("material_changed")
class MaterialChanged:
    rev: int
    origin: int
    object: int
    material: Material


@_server_event("grab_changed")
class GrabChanged:
    rev: int
    origin: int
    object: int
    owner: Optional[int] = None


@_server_event("avatar_moved")
class AvatarMoved:
    rev: int
    origin: int
    client: int
    head: Transform = field(default_factory=Transform)
    left: Transform = field(default_factory=Transform)
    right: Transform = field(default_factory=Transform)
    gone: bool = False


@_server_event("slice_changed")
class SliceChanged:
    rev: int
    origin: int
    stack: str
    index: int
    count: int
    png_b64: str = ""


@_server_event("asset_catalog")
class AssetCatalog:
    rev: int
    origin: int
    entries: list[AssetInfo]


@_server_event("quantify_result")
class QuantifyResult:
    rev: int
    origin: int
    object: int
    report: dict


@_server_event("op_rejected")
class OpRejected:
    rev: int
    origin: int
    seq: int
    reason: str
    detail: str = ""


# ----------------------------------------------------------------- codec

def _enc_transform(t: Transform) -> dict:
    return {
        "pos": [t.position.x, t.position.y, t.position.z],
        "rot": [t.rotation.w, t.rotation.x, t.rotation.y, t.rotation.z],
        "scale": t.scale,
    }


def _dec_transform(v) -> Transform:
    try:
        px, py, pz = (float(c) for c in v["pos"])
        w, x, y, z = (float(c) for c in v["rot"])
        return Transform(Vec3(px, py, pz), UnitQuat(w, x, y, z), float(v["scale"]))
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedMessage(f"bad transform: {e}") from None


def _enc_vec3(v: Vec3) -> list:
    return [v.x, v.y, v.z]


def _dec_vec3(v) -> Vec3:
    try:
        x, y, z = (float(c) for c in v)
        return Vec3(x, y, z)
    except (TypeError, ValueError) as e:
        raise MalformedMessage(f"bad vec3: {e}") from None


def _enc_material(m: Material) -> dict:
    return {"preset": m.preset.value, "opacity": m.opacity, "color": list(m.base_color)}


def _dec_material(v) -> Material:
    try:
        return Material(
            preset=MaterialPreset(v["preset"]),
            opacity=float(v["opacity"]),
            base_color=tuple(float(c) for c in v["color"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedMessage(f"bad material: {e}") from None


def _enc_value(v):
    if isinstance(v, Transform):
        return _enc_transform(v)
    if isinstance(v, Vec3):
        return _enc_vec3(v)
    if isinstance(v, Material):
        return _enc_material(v)
    if is_dataclass(v) and not isinstance(v, type):
        return {f.name: _enc_value(getattr(v, f.name)) for f in fields(v)}
    if isinstance(v, (list, tuple)):
        return [_enc_value(x) for x in v]
    return v


def _dec_value(v, hint):
    origin = get_origin(hint)
    if origin is not None:
        args = get_args(hint)
        if origin is list:
            if not isinstance(v, list):
                raise MalformedMessage(f"expected list, got {type(v).__name__}")
            return [_dec_value(x, args[0]) for x in v]
        if type(None) in args:  # Optional[T]
            if v is None:
                return None
            inner = next(a for a in args if a is not type(None))
            return _dec_value(v, inner)
        raise MalformedMessage(f"unsupported wire type {hint}")
    if hint is Transform:
        return _dec_transform(v)
    if hint is Vec3:
        return _dec_vec3(v)
    if hint is Material:
        return _dec_material(v)
    if is_dataclass(hint):
        return _dec_dataclass(v, hint)
    if hint is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise MalformedMessage(f"expected int, got {v!r}")
        return v
    if hint is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise MalformedMessage(f"expected number, got {v!r}")
        return float(v)
    if hint is str:
        if not isinstance(v, str):
            raise MalformedMessage(f"expected string, got {v!r}")
        return v
    if hint is bool:
        if not isinstance(v, bool):
            raise MalformedMessage(f"expected bool, got {v!r}")
        return v
    if hint is dict:
        if not isinstance(v, dict):
            raise MalformedMessage(f"expected object, got {v!r}")
        return v
    raise MalformedMessage(f"unsupported wire type {hint}")


_HINTS_CACHE: dict[type, dict] = {}


def _hints(cls) -> dict:
    if cls not in _HINTS_CACHE:
        _HINTS_CACHE[cls] = get_type_hints(cls)
    return _HINTS_CACHE[cls]


def _dec_dataclass(payload, cls):
    if not isinstance(payload, dict):
        raise MalformedMessage(f"expected object for {cls.__name__}, got {type(payload).__name__}")
    hints = _hints(cls)
    kwargs = {}
    for f in fields(cls):
        if f.name in payload:
            kwargs[f.name] = _dec_value(payload[f.name], hints[f.name])
        elif f.default is MISSING and f.default_factory is MISSING:
            raise MalformedMessage(f"{cls.__name__} missing field {f.name!r}")
    return cls(**kwargs)


def encode(msg) -> bytes:
    """Serialize a message to one canonical JSON frame."""
    payload = {"t": msg.kind}
    for f in fields(msg):
        payload[f.name] = _enc_value(getattr(msg, f.name))
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def decode(data: bytes):
    """Parse one frame; unknown fields ignored, unknown kind is an error."""
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise MalformedMessage(str(e)) from None
    if not isinstance(obj, dict):
        raise MalformedMessage("frame must be a JSON object")
    kind = obj.get("t")
    if not isinstance(kind, str):
        raise MalformedMessage("missing kind field 't'")
    cls = _REGISTRY.get(kind)
    if cls is None:
        raise UnknownKind(kind)
    try:
        return _dec_dataclass(obj, cls)
    except MalformedMessage:
        raise
    except (TypeError, ValueError) as e:
        raise MalformedMessage(str(e)) from None


# ------------------------------------------------------- mesh side channel

MESH_ID_PREFIX_BYTES = 8


def pack_mesh_frame(mesh_id: int, stl_bytes: bytes) -> bytes:
    return mesh_id.to_bytes(MESH_ID_PREFIX_BYTES, "little") + stl_bytes


def unpack_mesh_frame(frame: bytes) -> tuple[int, bytes]:
    if len(frame) < MESH_ID_PREFIX_BYTES:
        raise MalformedMessage("mesh frame shorter than its id prefix")
    return int.from_bytes(frame[:MESH_ID_PREFIX_BYTES], "little"), frame[MESH_ID_PREFIX_BYTES:]
