/** Desktop gesture mappings with the same semantics as the hand gestures:
 * wheel/keyboard resize uses the two-hand distance-ratio contract
 * (d1/d0 = wheel factor), push/pull converts stick deflection to meters
 * via speed * dt, and teleport targeting mirrors the server's floor-plane
 * intersection so the indicator matches what the server will accept. */

import type { Vec3 } from './protocol';

export const PUSH_PULL_SPEED = 2.0; // meters per second at full deflection
export const RESIZE_WHEEL_FACTOR = 1.1; // d1/d0 per wheel notch

export function pushPullDelta(deflection: number, dtSeconds: number): number {
  const clamped = Math.max(-1, Math.min(1, deflection));
  return clamped * PUSH_PULL_SPEED * dtSeconds;
}

/** Wheel notches -> (d0, d1) pair with d1/d0 = factor^notches. */
export function wheelResizeGesture(notches: number): { d0: number; d1: number } {
  return { d0: 1.0, d1: Math.pow(RESIZE_WHEEL_FACTOR, notches) };
}

/** Stick input for the stack panel: rightward +1, leftward -1. */
export function sliceStep(current: number, stickX: number, count: number): number {
  let next = current;
  if (stickX > 0.5) next = current + 1;
  else if (stickX < -0.5) next = current - 1;
  return Math.max(0, Math.min(count - 1, next));
}

/** Floor-plane hit within range, or null; mirrors the server's rule. */
export function teleportTarget(
  origin: Vec3, direction: Vec3, floorY: number, maxRange: number,
): Vec3 | null {
  const [ox, oy, oz] = origin;
  const [dx, dy, dz] = direction;
  if (dy >= -1e-6) return null;
  const t = (floorY - oy) / dy;
  if (t < 0) return null;
  const hit: Vec3 = [ox + t * dx, floorY, oz + t * dz];
  const rx = hit[0] - ox;
  const rz = hit[2] - oz;
  if (Math.sqrt(rx * rx + rz * rz) > maxRange) return null;
  return hit;
}
