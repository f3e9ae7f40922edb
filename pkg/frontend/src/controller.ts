/** Maps picked objects + desktop gestures to session ops according to the
 * active mode. Mode toggles themselves never touch the scene; only
 * gestures inside a mode emit ops, and each gesture maps to exactly one op
 * kind. Kept free of DOM and renderer types so it is testable headless. */

import type { SessionClient } from './connection';
import { ModeState } from './modes';
import { pushPullDelta, teleportTarget, wheelResizeGesture } from './gestures';
import type { Transform, Vec3 } from './protocol';

export const TELEPORT_MAX_RANGE = 20.0;
export const FLOOR_Y = 0.0;

export class InteractionController {
  readonly modes = new ModeState();
  private grabbed: number | null = null;

  constructor(private client: SessionClient) {}

  get grabbedObject(): number | null {
    return this.grabbed;
  }

  /** Grip on a picked object (navigate mode manipulation). */
  grabStart(objectId: number, hand: Transform): void {
    this.grabbed = objectId;
    this.client.grabAcquire(objectId, hand);
  }

  /** Drag while gripping: optimistic locally, authoritative on echo. */
  dragTo(hand: Transform, predicted: Transform): void {
    if (this.grabbed === null) return;
    this.client.grabMove(this.grabbed, hand, predicted);
  }

  grabEnd(): void {
    if (this.grabbed === null) return;
    this.client.grabRelease(this.grabbed);
    this.grabbed = null;
  }

  /** Stick deflection in push-pull mode slides the object along the ray. */
  stickPushPull(objectId: number, origin: Vec3, direction: Vec3,
                deflection: number, dtSeconds: number): boolean {
    if (this.modes.mode !== 'push-pull') return false;
    const delta = pushPullDelta(deflection, dtSeconds);
    if (delta === 0) return false;
    this.client.pushPull(objectId, origin, direction, delta);
    return true;
  }

  /** Wheel in resize mode scales by the two-hand ratio contract. */
  wheelResize(objectId: number, notches: number): boolean {
    if (this.modes.mode !== 'resize' || notches === 0) return false;
    const { d0, d1 } = wheelResizeGesture(notches);
    this.client.resize(objectId, d0, d1);
    return true;
  }

  /** Click in teleport mode jumps to the floor target when one exists. */
  clickTeleport(origin: Vec3, direction: Vec3): Vec3 | null {
    if (this.modes.mode !== 'teleport') return null;
    const target = teleportTarget(origin, direction, FLOOR_Y, TELEPORT_MAX_RANGE);
    if (target === null) return null;
    this.client.teleport(origin, direction, TELEPORT_MAX_RANGE);
    return target;
  }
}
