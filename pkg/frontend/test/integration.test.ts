/** Viewer reconciliation acceptance against a live server: connect, import
 * the cube asset, grab-move with optimistic prediction, disconnect and
 * reconnect (fresh join must equal the server snapshot), and roll back the
 * local prediction when a contested grab is rejected. */

import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import WebSocket from 'ws';

import { SessionClient, type WsLike } from '../src/connection';
import { IDENTITY, type ServerEvent, type Transform } from '../src/protocol';
import { parseBinaryStl } from '../src/stl';
import { startServer, type LiveServer } from './util';

let server: LiveServer;

const wsFactory = (url: string) => new WebSocket(url) as unknown as WsLike;

function until(cond: () => boolean, timeoutMs = 15_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  return new Promise((resolve, reject) => {
    const tick = () => {
      if (cond()) return resolve();
      if (Date.now() > deadline) return reject(new Error('condition never became true'));
      setTimeout(tick, 10);
    };
    tick();
  });
}

function makeClient(name: string, toasts?: string[]): SessionClient {
  return new SessionClient({
    url: server.url,
    name,
    wsFactory,
    reconnectDelayMs: 100,
    onToast: (t) => toasts?.push(t),
  });
}

beforeAll(async () => {
  server = await startServer();
}, 60_000);

afterAll(() => {
  server?.stop();
});

describe('viewer reconciliation against a live server', () => {
  it('import, optimistic grab-move, reconnect equality, contested rollback', async () => {
    const toastsA: string[] = [];
    const alice = makeClient('alice', toastsA);
    const bob = makeClient('bob');
    await alice.connect();
    await bob.connect();
    await until(() => alice.replica.revision >= 0 && bob.replica.revision >= 0);

    // import the cube and fetch its geometry over the binary side channel
    const addedP = alice.waitFor(
      (ev): ev is Extract<ServerEvent, { t: 'object_added' }> => ev.t === 'object_added');
    alice.importAsset('cube.stl');
    const added = await addedP;
    const oid = added.object.id;
    alice.ensureMesh(added.object.mesh);
    await until(() => alice.meshes.has(added.object.mesh));
    const stl = parseBinaryStl(alice.meshes.get(added.object.mesh)!);
    expect(stl.triangleCount).toBe(12);

    // grab, then optimistic move: local view jumps before the echo
    const grabP = alice.waitFor(
      (ev): ev is Extract<ServerEvent, { t: 'grab_changed' }> => ev.t === 'grab_changed');
    alice.grabAcquire(oid, IDENTITY);
    await grabP;

    const hand: Transform = { pos: [0, 0, 1], rot: [1, 0, 0, 0], scale: 1 };
    const predicted: Transform = { pos: [0, 0, 1], rot: [1, 0, 0, 0], scale: 1 };
    const echoP = alice.waitFor(
      (ev): ev is Extract<ServerEvent, { t: 'transform_changed' }> => ev.t === 'transform_changed');
    alice.grabMove(oid, hand, predicted);
    expect(alice.displayTransform(oid)).toEqual(predicted); // optimistic, pre-echo
    expect(alice.prediction.hasOverride(oid)).toBe(true);
    await echoP;
    expect(alice.prediction.hasOverride(oid)).toBe(false); // reconciled within one event
    expect(alice.replica.objects.get(oid)!.transform.pos).toEqual([0, 0, 1]);
    alice.grabRelease(oid);
    await until(() => bob.replica.objects.get(oid)?.grab_owner === null);

    // disconnect, reconnect with a fresh join: scene equals the server snapshot
    alice.disconnect();
    await until(() => bob.replica.avatars.size === 1);
    const alice2 = makeClient('alice2');
    await alice2.connect();
    await until(() => alice2.replica.objects.size > 0);
    expect(alice2.replica.document()).toEqual(bob.replica.document());
    expect(alice2.replica.objects.get(oid)!.transform.pos).toEqual([0, 0, 1]);
    expect(alice2.replica.objects.get(oid)!.grab_owner).toBeNull();

    // contested grab: bob holds the lock, alice2's prediction must roll back
    const bobGrabP = bob.waitFor(
      (ev): ev is Extract<ServerEvent, { t: 'grab_changed' }> => ev.t === 'grab_changed');
    bob.grabAcquire(oid, IDENTITY);
    await bobGrabP;

    const rejectedAcquire = alice2.waitFor(
      (ev): ev is Extract<ServerEvent, { t: 'op_rejected' }> => ev.t === 'op_rejected');
    alice2.grabAcquire(oid, IDENTITY);
    const rej1 = await rejectedAcquire;
    expect(rej1.reason).toBe('AlreadyGrabbed');

    const farAway: Transform = { pos: [9, 9, 9], rot: [1, 0, 0, 0], scale: 1 };
    const rejectedMove = alice2.waitFor(
      (ev): ev is Extract<ServerEvent, { t: 'op_rejected' }> => ev.t === 'op_rejected');
    alice2.grabMove(oid, farAway, farAway);
    expect(alice2.displayTransform(oid)).toEqual(farAway); // optimistic
    const rej2 = await rejectedMove;
    expect(rej2.reason).toBe('NotGrabOwner');
    // prediction rolled back to the last server transform
    expect(alice2.displayTransform(oid)).toEqual(alice2.replica.objects.get(oid)!.transform);
    expect(alice2.displayTransform(oid)!.pos).toEqual([0, 0, 1]);
    expect(toastsA.length).toBe(0); // alice saw no rejections herself

    alice2.disconnect();
    bob.disconnect();
  }, 60_000);

  it('the image-stack panel is shared: slice changes replicate', async () => {
    const a = makeClient('carol');
    const b = makeClient('dave');
    await a.connect();
    await b.connect();

    const sliceP = b.waitFor(
      (ev): ev is Extract<ServerEvent, { t: 'slice_changed' }> => ev.t === 'slice_changed');
    a.importStack('stack');
    const opened = await sliceP;
    expect(opened.index).toBe(0);
    expect(opened.count).toBe(4);
    expect(opened.png_b64.length).toBeGreaterThan(0);

    // a remote client's slider move updates everyone's panel
    const moveP = a.waitFor(
      (ev): ev is Extract<ServerEvent, { t: 'slice_changed' }> => ev.t === 'slice_changed');
    b.selectSlice(2);
    const moved = await moveP;
    expect(moved.index).toBe(2);
    await until(() => a.replica.stack?.index === 2 && b.replica.stack?.index === 2);

    // out-of-range selections are rejected, panel state unchanged
    const rejP = a.waitFor(
      (ev): ev is Extract<ServerEvent, { t: 'op_rejected' }> => ev.t === 'op_rejected');
    a.selectSlice(4);
    expect((await rejP).reason).toBe('BadPayload');
    expect(a.replica.stack?.index).toBe(2);

    a.disconnect();
    b.disconnect();
  }, 60_000);
});
