/** Wire types for the session protocol: one JSON object per frame, "t" is
 * the kind. Client ops carry a per-client strictly-increasing seq; server
 * events carry rev (scene revision after the event) and origin. */

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w, x, y, z

export interface Transform {
  pos: Vec3;
  rot: Quat;
  scale: number;
}

export const IDENTITY: Transform = { pos: [0, 0, 0], rot: [1, 0, 0, 0], scale: 1 };

export type MaterialPreset = 'default' | 'glass' | 'brick';

export interface Material {
  preset: MaterialPreset;
  opacity: number;
  color: [number, number, number];
}

export interface PartRef {
  index: number;
  name: string;
  start: number;
  end: number;
}

export interface ObjectState {
  id: number;
  name: string;
  mesh: number;
  transform: Transform;
  material: Material;
  grab_owner: number | null;
  part: PartRef | null;
}

export interface StackState {
  name: string;
  index: number;
  count: number;
}

export interface AvatarState {
  client: number;
  head: Transform;
  left: Transform;
  right: Transform;
}

export interface AssetInfo {
  name: string;
  kind: 'mesh-obj' | 'mesh-stl' | 'image-stack';
  size: number;
  slices: number | null;
}

// ---------------------------------------------------------------- client ops

export type ClientOp =
  | { t: 'hello'; seq: number; name: string; token?: string }
  | { t: 'list_assets'; seq: number }
  | { t: 'import_asset'; seq: number; name: string }
  | { t: 'import_stack'; seq: number; name: string }
  | { t: 'grab_acquire'; seq: number; object: number; hand: Transform }
  | { t: 'grab_move'; seq: number; object: number; hand: Transform }
  | { t: 'grab_release'; seq: number; object: number }
  | { t: 'push_pull'; seq: number; object: number; origin: Vec3; direction: Vec3; delta: number }
  | { t: 'resize'; seq: number; object: number; d0: number; d1: number }
  | { t: 'set_material'; seq: number; object: number; preset: MaterialPreset; opacity: number | null }
  | { t: 'set_opacity'; seq: number; object: number; opacity: number }
  | { t: 'teleport'; seq: number; origin: Vec3; direction: Vec3; max_range: number }
  | { t: 'avatar_pose'; seq: number; head: Transform; left: Transform; right: Transform }
  | { t: 'select_slice'; seq: number; index: number }
  | { t: 'request_quantify'; seq: number; object: number }
  | { t: 'fetch_mesh'; seq: number; mesh: number };

export type MutatingOpKind =
  | 'import_asset' | 'import_stack' | 'grab_acquire' | 'grab_move' | 'grab_release'
  | 'push_pull' | 'resize' | 'set_material' | 'set_opacity' | 'select_slice';

export const MUTATING_OP_KINDS: ReadonlySet<string> = new Set<MutatingOpKind>([
  'import_asset', 'import_stack', 'grab_acquire', 'grab_move', 'grab_release',
  'push_pull', 'resize', 'set_material', 'set_opacity', 'select_slice',
]);

// -------------------------------------------------------------- server events

export type ServerEvent =
  | { t: 'welcome'; rev: number; origin: number; client: number }
  | { t: 'scene_snapshot'; rev: number; origin: number; objects: ObjectState[];
      stack: StackState | null; avatars: AvatarState[] }
  | { t: 'object_added'; rev: number; origin: number; object: ObjectState }
  | { t: 'transform_changed'; rev: number; origin: number; object: number; transform: Transform }
  | { t: 'material_changed'; rev: number; origin: number; object: number; material: Material }
  | { t: 'grab_changed'; rev: number; origin: number; object: number; owner: number | null }
  | { t: 'avatar_moved'; rev: number; origin: number; client: number;
      head: Transform; left: Transform; right: Transform; gone: boolean }
  | { t: 'slice_changed'; rev: number; origin: number; stack: string; index: number;
      count: number; png_b64: string }
  | { t: 'asset_catalog'; rev: number; origin: number; entries: AssetInfo[] }
  | { t: 'quantify_result'; rev: number; origin: number; object: number; report: Record<string, unknown> }
  | { t: 'op_rejected'; rev: number; origin: number; seq: number; reason: string; detail: string };

export function parseEvent(data: string): ServerEvent {
  const obj = JSON.parse(data);
  if (typeof obj !== 'object' || obj === null || typeof obj.t !== 'string') {
    throw new Error('malformed server frame');
  }
  return obj as ServerEvent;
}

/** Binary mesh frame: 8-byte little-endian mesh id, then binary STL. */
export function unpackMeshFrame(buf: ArrayBuffer): { meshId: number; stl: ArrayBuffer } {
  if (buf.byteLength < 8) throw new Error('mesh frame shorter than its id prefix');
  const view = new DataView(buf);
  const meshId = Number(view.getBigUint64(0, true));
  return { meshId, stl: buf.slice(8) };
}
