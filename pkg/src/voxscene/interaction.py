"""Manipulation mechanics as state transitions over a Scene: exclusive
grabs that rigidly attach an object to a hand pose, push/pull along a
pointing ray, two-hand resize, floor teleport targeting, and material
changes.

All functions operate on the Scene they are handed and bump its revision
exactly once per applied mutation; the session sequencer is the only
caller in production.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .core import (
    Material,
    MaterialPreset,
    Scene,
    Transform,
    UnknownObject,
    Vec3,
    compose,
    invert,
)

__all__ = [
    "Ray",
    "GrabState",
    "InteractionError",
    "AlreadyGrabbed",
    "StaleGrab",
    "DegenerateGesture",
    "grab_acquire",
    "grab_update",
    "grab_release",
    "push_pull",
    "two_hand_resize",
    "teleport_target",
    "set_material",
    "MIN_RAY_DISTANCE",
    "SCALE_MIN",
    "SCALE_MAX",
    "MIN_GESTURE_SEPARATION",
]

MIN_RAY_DISTANCE = 0.1     # objects cannot be pulled closer than this to the controller
SCALE_MIN = 0.01
SCALE_MAX = 100.0
MIN_GESTURE_SEPARATION = 0.01  # resize gesture needs hands at least 1 cm apart


class InteractionError(Exception):
    pass


class AlreadyGrabbed(InteractionError):
    def __init__(self, object_id: int, owner: int):
        super().__init__(f"object {object_id} already grabbed by client {owner}")
        self.object_id = object_id
        self.owner = owner


class StaleGrab(InteractionError):
    pass


class DegenerateGesture(InteractionError):
    pass


@dataclass(frozen=True)
class Ray:
    origin: Vec3
    direction: Vec3

    def __post_init__(self):
        n = self.direction.norm()
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"ray direction must be unit length, |d|={n}")


@dataclass(frozen=True)
class GrabState:
    """Exclusive manipulation lock: offset is the object pose in hand space."""

    client_id: int
    object_id: int
    offset: Transform


def grab_acquire(scene: Scene, client_id: int, object_id: int, hand_pose: Transform) -> GrabState:
    obj = scene.get(object_id)
    if obj.grab_owner is not None:
        raise AlreadyGrabbed(object_id, obj.grab_owner)
    offset = compose(invert(hand_pose), obj.transform)
    scene.set_grab_owner(object_id, client_id)
    return GrabState(client_id=client_id, object_id=object_id, offset=offset)


def grab_update(scene: Scene, grab: GrabState, hand_pose: Transform) -> Transform:
    """Rigidly follow the hand: object pose = hand pose ∘ grab offset."""
    try:
        obj = scene.get(grab.object_id)
    except UnknownObject:
        raise StaleGrab(f"object {grab.object_id} no longer exists") from None
    if obj.grab_owner != grab.client_id:
        raise StaleGrab(f"grab on object {grab.object_id} no longer owned by client {grab.client_id}")
    new_transform = compose(hand_pose, grab.offset)
    scene.set_transform(grab.object_id, new_transform)
    return new_transform


def grab_release(scene: Scene, grab: GrabState) -> None:
    try:
        obj = scene.get(grab.object_id)
    except UnknownObject:
        return
    if obj.grab_owner == grab.client_id:
        scene.set_grab_owner(grab.object_id, None)


def push_pull(scene: Scene, object_id: int, ray: Ray, delta: float) -> Transform:
    """Slide the object along the ray; it can never end up behind the hand."""
    obj = scene.get(object_id)
    pos = obj.transform.position + ray.direction.scaled(delta)
    along = (pos - ray.origin).dot(ray.direction)
    if along < MIN_RAY_DISTANCE:
        pos = pos + ray.direction.scaled(MIN_RAY_DISTANCE - along)
    new_transform = Transform(position=pos, rotation=obj.transform.rotation, scale=obj.transform.scale)
    scene.set_transform(object_id, new_transform)
    return new_transform


def two_hand_resize(scene: Scene, object_id: int, d0: float, d1: float) -> Transform:
    """Scale by the hands-separation ratio d1/d0, clamped to [0.01, 100]."""
    if d0 < MIN_GESTURE_SEPARATION:
        raise DegenerateGesture(f"gesture start separation {d0} m below {MIN_GESTURE_SEPARATION} m")
    obj = scene.get(object_id)
    scale = min(SCALE_MAX, max(SCALE_MIN, obj.transform.scale * (d1 / d0)))
    new_transform = Transform(position=obj.transform.position, rotation=obj.transform.rotation, scale=scale)
    scene.set_transform(object_id, new_transform)
    return new_transform


def teleport_target(ray: Ray, floor_height: float, max_range: float) -> Optional[Vec3]:
    """Where the ray meets the floor plane, if within range; else None."""
    if ray.direction.y >= -1e-6:
        return None
    t = (floor_height - ray.origin.y) / ray.direction.y
    if t < 0.0:
        return None
    hit = ray.origin + ray.direction.scaled(t)
    dx = hit.x - ray.origin.x
    dz = hit.z - ray.origin.z
    if math.sqrt(dx * dx + dz * dz) > max_range:
        return None
    return hit


def set_material(
    scene: Scene,
    object_id: int,
    preset: MaterialPreset,
    opacity: Optional[float] = None,
) -> Material:
    """Apply a preset and optional opacity; Material clamps both."""
    obj = scene.get(object_id)
    if opacity is None:
        opacity = obj.material.opacity
    material = Material(preset=preset, opacity=opacity, base_color=obj.material.base_color)
    scene.set_material(object_id, material)
    return material
