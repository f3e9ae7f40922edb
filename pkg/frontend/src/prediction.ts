/** Optimistic manipulation: while this client drags an object, the viewer
 * shows its own transform immediately and reconciles to the server on the
 * next TransformChanged (the sequencer echoes every applied op back to its
 * originator). A rejection rolls the object straight back to the last
 * server-confirmed transform. */

import type { Transform } from './protocol';

export class Prediction {
  private overrides = new Map<number, Transform>();
  private pending = new Map<number, number>(); // seq -> object id

  /** Optimistically show `transform` for the object until seq resolves. */
  predict(seq: number, objectId: number, transform: Transform): void {
    this.overrides.set(objectId, transform);
    this.pending.set(seq, objectId);
  }

  /** Track an op that can be rejected but has no local transform effect. */
  track(seq: number, objectId: number): void {
    this.pending.set(seq, objectId);
  }

  /** Server transform arrived: it is authoritative, drop the override. */
  onTransformChanged(objectId: number): void {
    this.overrides.delete(objectId);
    for (const [seq, obj] of this.pending) {
      if (obj === objectId) this.pending.delete(seq);
    }
  }

  /** Returns the rolled-back object id when the seq was a tracked op. */
  onRejected(seq: number): number | null {
    const objectId = this.pending.get(seq);
    if (objectId === undefined) return null;
    this.pending.delete(seq);
    this.overrides.delete(objectId);
    return objectId;
  }

  reset(): void {
    this.overrides.clear();
    this.pending.clear();
  }

  /** What the renderer should draw for this object. */
  display(objectId: number, confirmed: Transform): Transform {
    return this.overrides.get(objectId) ?? confirmed;
  }

  hasOverride(objectId: number): boolean {
    return this.overrides.has(objectId);
  }
}
