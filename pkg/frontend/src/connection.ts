/** Session connection: sends ops (keeping an outbound log), folds server
 * events into the replica, runs optimistic prediction, fetches mesh bytes
 * over the binary side channel, and reconnects with a fresh join after a
 * connection loss. Works with the browser WebSocket or ws in node. */

import { Prediction } from './prediction';
import { Replica } from './replica';
import type {
  ClientOp,
  MaterialPreset,
  ServerEvent,
  Transform,
  Vec3,
} from './protocol';
import { parseEvent, unpackMeshFrame } from './protocol';

export interface WsLike {
  binaryType: string;
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type WsFactory = (url: string) => WsLike;

export interface SessionClientOptions {
  url: string;
  name: string;
  wsFactory?: WsFactory;
  reconnectDelayMs?: number;
  onToast?: (text: string) => void;
  onMeshData?: (meshId: number, stl: ArrayBuffer) => void;
  onEvent?: (ev: ServerEvent) => void;
}

const defaultFactory: WsFactory = (url) => new WebSocket(url) as unknown as WsLike;

export class SessionClient {
  readonly replica = new Replica();
  readonly prediction = new Prediction();
  readonly outLog: ClientOp[] = [];
  readonly meshes = new Map<number, ArrayBuffer>();
  clientId: number | null = null;
  connected = false;

  private seq = 0;
  private ws: WsLike | null = null;
  private closedByUs = false;
  private requestedMeshes = new Set<number>();
  private listeners = new Set<(ev: ServerEvent) => void>();
  private readonly opts: SessionClientOptions;

  constructor(opts: SessionClientOptions) {
    this.opts = opts;
  }

  nextSeq(): number {
    this.seq += 1;
    return this.seq;
  }

  connect(): Promise<void> {
    this.closedByUs = false;
    const factory = this.opts.wsFactory ?? defaultFactory;
    const ws = factory(this.opts.url);
    this.ws = ws;
    ws.binaryType = 'arraybuffer';
    return new Promise((resolve, reject) => {
      let settled = false;
      ws.onopen = () => {
        this.connected = true;
        this.send({ t: 'hello', seq: this.nextSeq(), name: this.opts.name });
      };
      ws.onmessage = (msg) => {
        if (typeof msg.data === 'string') {
          const ev = parseEvent(msg.data);
          if (ev.t === 'welcome' && !settled) {
            settled = true;
            this.clientId = ev.client;
            resolve();
          }
          this.handleEvent(ev);
        } else if (msg.data instanceof ArrayBuffer) {
          const { meshId, stl } = unpackMeshFrame(msg.data);
          this.meshes.set(meshId, stl);
          this.opts.onMeshData?.(meshId, stl);
        }
      };
      ws.onerror = () => {
        if (!settled) {
          settled = true;
          reject(new Error('websocket error before welcome'));
        }
      };
      ws.onclose = () => {
        this.connected = false;
        if (!settled) {
          settled = true;
          reject(new Error('websocket closed before welcome'));
        }
        if (!this.closedByUs) {
          // fresh join on reconnect: the snapshot resets the replica
          this.prediction.reset();
          this.requestedMeshes.clear();
          setTimeout(() => {
            this.connect().catch(() => undefined);
          }, this.opts.reconnectDelayMs ?? 1000);
        }
      };
    });
  }

  disconnect(): void {
    this.closedByUs = true;
    this.ws?.close();
    this.connected = false;
  }

  private handleEvent(ev: ServerEvent): void {
    if (ev.t === 'transform_changed') {
      this.prediction.onTransformChanged(ev.object);
    } else if (ev.t === 'op_rejected') {
      const rolledBack = this.prediction.onRejected(ev.seq);
      if (rolledBack !== null) {
        this.opts.onToast?.(`${ev.reason}: rolled back object ${rolledBack}`);
      } else {
        this.opts.onToast?.(`${ev.reason}${ev.detail ? `: ${ev.detail}` : ''}`);
      }
    }
    this.replica.apply(ev);
    this.opts.onEvent?.(ev);
    for (const fn of this.listeners) fn(ev);
  }

  send(op: ClientOp): void {
    this.outLog.push(op);
    if (this.ws && this.connected) this.ws.send(JSON.stringify(op));
  }

  /** Resolve on the next event matching `pred` (testing + await-style UI). */
  waitFor<T extends ServerEvent>(
    pred: (ev: ServerEvent) => ev is T, timeoutMs = 10_000,
  ): Promise<T> {
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => {
        this.listeners.delete(handler);
        reject(new Error('timed out waiting for event'));
      }, timeoutMs);
      const handler = (ev: ServerEvent) => {
        if (pred(ev)) {
          clearTimeout(timer);
          this.listeners.delete(handler);
          resolve(ev);
        }
      };
      this.listeners.add(handler);
    });
  }

  // ---------------------------------------------------------- op helpers

  listAssets(): void {
    this.send({ t: 'list_assets', seq: this.nextSeq() });
  }

  importAsset(name: string): void {
    this.send({ t: 'import_asset', seq: this.nextSeq(), name });
  }

  importStack(name: string): void {
    this.send({ t: 'import_stack', seq: this.nextSeq(), name });
  }

  grabAcquire(objectId: number, hand: Transform): number {
    const seq = this.nextSeq();
    this.prediction.track(seq, objectId);
    this.send({ t: 'grab_acquire', seq, object: objectId, hand });
    return seq;
  }

  /** Optimistic: the object follows the hand locally until the echo. */
  grabMove(objectId: number, hand: Transform, predicted: Transform): number {
    const seq = this.nextSeq();
    this.prediction.predict(seq, objectId, predicted);
    this.send({ t: 'grab_move', seq, object: objectId, hand });
    return seq;
  }

  grabRelease(objectId: number): void {
    this.send({ t: 'grab_release', seq: this.nextSeq(), object: objectId });
  }

  pushPull(objectId: number, origin: Vec3, direction: Vec3, delta: number): number {
    const seq = this.nextSeq();
    this.prediction.track(seq, objectId);
    this.send({ t: 'push_pull', seq, object: objectId, origin, direction, delta });
    return seq;
  }

  resize(objectId: number, d0: number, d1: number): number {
    const seq = this.nextSeq();
    this.prediction.track(seq, objectId);
    this.send({ t: 'resize', seq, object: objectId, d0, d1 });
    return seq;
  }

  setMaterial(objectId: number, preset: MaterialPreset, opacity: number | null): void {
    this.send({ t: 'set_material', seq: this.nextSeq(), object: objectId, preset, opacity });
  }

  setOpacity(objectId: number, opacity: number): void {
    this.send({ t: 'set_opacity', seq: this.nextSeq(), object: objectId, opacity });
  }

  teleport(origin: Vec3, direction: Vec3, maxRange: number): void {
    this.send({ t: 'teleport', seq: this.nextSeq(), origin, direction, max_range: maxRange });
  }

  selectSlice(index: number): void {
    this.send({ t: 'select_slice', seq: this.nextSeq(), index });
  }

  requestQuantify(objectId: number): void {
    this.send({ t: 'request_quantify', seq: this.nextSeq(), object: objectId });
  }

  ensureMesh(meshId: number): void {
    if (this.meshes.has(meshId) || this.requestedMeshes.has(meshId)) return;
    this.requestedMeshes.add(meshId);
    this.send({ t: 'fetch_mesh', seq: this.nextSeq(), mesh: meshId });
  }

  /** Renderer-facing transform (prediction override or replica truth). */
  displayTransform(objectId: number): Transform | null {
    const obj = this.replica.objects.get(objectId);
    if (!obj) return null;
    return this.prediction.display(objectId, obj.transform);
  }
}
