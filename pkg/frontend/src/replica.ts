/** Client-side reconstruction of the replicated session document. The
 * viewer holds no authoritative state: a snapshot resets everything, and
 * events between snapshots are folded in as they arrive. */

import type { AvatarState, ObjectState, ServerEvent, StackState } from './protocol';

export class Replica {
  revision = 0;
  objects = new Map<number, ObjectState>();
  stack: StackState | null = null;
  avatars = new Map<number, AvatarState>();

  apply(ev: ServerEvent): void {
    switch (ev.t) {
      case 'scene_snapshot': {
        this.revision = ev.rev;
        this.objects = new Map(ev.objects.map((o) => [o.id, o]));
        this.stack = ev.stack;
        this.avatars = new Map(ev.avatars.map((a) => [a.client, a]));
        break;
      }
      case 'object_added':
        this.objects.set(ev.object.id, ev.object);
        this.revision = ev.rev;
        break;
      case 'transform_changed': {
        const obj = this.objects.get(ev.object);
        if (obj) this.objects.set(ev.object, { ...obj, transform: ev.transform });
        this.revision = ev.rev;
        break;
      }
      case 'material_changed': {
        const obj = this.objects.get(ev.object);
        if (obj) this.objects.set(ev.object, { ...obj, material: ev.material });
        this.revision = ev.rev;
        break;
      }
      case 'grab_changed': {
        const obj = this.objects.get(ev.object);
        if (obj) this.objects.set(ev.object, { ...obj, grab_owner: ev.owner });
        this.revision = ev.rev;
        break;
      }
      case 'slice_changed':
        this.stack = { name: ev.stack, index: ev.index, count: ev.count };
        this.revision = ev.rev;
        break;
      case 'avatar_moved':
        if (ev.gone) {
          this.avatars.delete(ev.client);
        } else {
          this.avatars.set(ev.client, {
            client: ev.client, head: ev.head, left: ev.left, right: ev.right,
          });
        }
        break;
      default:
        break; // welcome / asset_catalog / quantify_result / op_rejected carry no doc state
    }
  }

  /** Canonical comparable form (avatars are presence, not document). */
  document(): { revision: number; objects: Record<number, ObjectState>; stack: StackState | null } {
    return {
      revision: this.revision,
      objects: Object.fromEntries(this.objects),
      stack: this.stack,
    };
  }
}
