/** Test helpers: binary STL bytes, fake sockets, and a live server runner. */

import { spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, writeFileSync, mkdirSync } from 'node:fs';
import { createServer } from 'node:net';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { crc32, deflateSync } from 'node:zlib';

import type { WsLike } from '../src/connection';
import type { ClientOp, ServerEvent } from '../src/protocol';

const CUBE_CORNERS: Array<[number, number, number]> = [
  [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
  [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
];
const CUBE_QUADS: Array<[number, number, number, number]> = [
  [0, 3, 2, 1], [4, 5, 6, 7], [0, 1, 5, 4], [2, 3, 7, 6], [0, 4, 7, 3], [1, 2, 6, 5],
];

export function cubeStlBytes(): Buffer {
  const tris: Array<[number, number, number]> = [];
  for (const [a, b, c, d] of CUBE_QUADS) {
    tris.push(CUBE_CORNERS[a], CUBE_CORNERS[b], CUBE_CORNERS[c]);
    tris.push(CUBE_CORNERS[a], CUBE_CORNERS[c], CUBE_CORNERS[d]);
  }
  const count = tris.length / 3;
  const buf = Buffer.alloc(84 + 50 * count);
  buf.writeUInt32LE(count, 80);
  for (let t = 0; t < count; t++) {
    const base = 84 + 50 * t + 12;
    for (let corner = 0; corner < 3; corner++) {
      const [x, y, z] = tris[t * 3 + corner];
      buf.writeFloatLE(x, base + corner * 12);
      buf.writeFloatLE(y, base + corner * 12 + 4);
      buf.writeFloatLE(z, base + corner * 12 + 8);
    }
  }
  return buf;
}

/** Minimal 8-bit grayscale PNG (one IDAT, filter 0 per scanline). */
export function grayPng(width: number, height: number, value: number): Buffer {
  const chunk = (type: string, data: Buffer): Buffer => {
    const body = Buffer.concat([Buffer.from(type, 'ascii'), data]);
    const len = Buffer.alloc(4);
    len.writeUInt32BE(data.length);
    const crc = Buffer.alloc(4);
    crc.writeUInt32BE(crc32(body) >>> 0);
    return Buffer.concat([len, body, crc]);
  };
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr.writeUInt8(8, 8);   // bit depth
  ihdr.writeUInt8(0, 9);   // grayscale
  const raw = Buffer.alloc(height * (width + 1));
  for (let y = 0; y < height; y++) {
    raw[y * (width + 1)] = 0; // filter none
    raw.fill(value, y * (width + 1) + 1, (y + 1) * (width + 1));
  }
  return Buffer.concat([
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk('IHDR', ihdr),
    chunk('IDAT', deflateSync(raw)),
    chunk('IEND', Buffer.alloc(0)),
  ]);
}

export function makeAssetsDir(): string {
  const dir = mkdtempSync(join(tmpdir(), 'voxscene-assets-'));
  writeFileSync(join(dir, 'cube.stl'), cubeStlBytes());
  mkdirSync(join(dir, 'stack'));
  for (let k = 0; k < 4; k++) {
    writeFileSync(join(dir, 'stack', `s${k}.png`), grayPng(6, 6, 40 * k + 20));
  }
  return dir;
}

export function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, '127.0.0.1', () => {
      const addr = srv.address();
      if (addr === null || typeof addr === 'string') {
        reject(new Error('no port'));
        return;
      }
      const port = addr.port;
      srv.close(() => resolve(port));
    });
  });
}

export interface LiveServer {
  proc: ChildProcess;
  port: number;
  url: string; // ws url with token
  stop(): void;
}

export async function startServer(token = 'sesame'): Promise<LiveServer> {
  const assets = makeAssetsDir();
  const port = await freePort();
  const tcpPort = await freePort();
  const proc = spawn('python3', [
    '-m', 'voxscene', 'serve',
    '--assets-dir', assets,
    '--bind', '127.0.0.1',
    '--port', String(port),
    '--tcp-port', String(tcpPort),
    '--session-token', token,
  ], { stdio: ['ignore', 'pipe', 'pipe'] });

  let stderr = '';
  proc.stderr?.on('data', (d) => { stderr += String(d); });

  const deadline = Date.now() + 30_000;
  // poll the HTTP side until it answers
  for (;;) {
    if (proc.exitCode !== null) throw new Error(`server died: ${stderr}`);
    try {
      const res = await fetch(`http://127.0.0.1:${port}/viewer/`);
      if (res.status === 200 || res.status === 503) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      proc.kill();
      throw new Error(`server did not come up: ${stderr}`);
    }
    await new Promise((r) => setTimeout(r, 50));
  }
  return {
    proc,
    port,
    url: `ws://127.0.0.1:${port}/ws?token=${token}`,
    stop: () => proc.kill(),
  };
}

/** In-memory socket for headless menu-parity tests: records what the
 * client sends and lets the test inject server events. */
export class FakeSocket implements WsLike {
  binaryType = 'arraybuffer';
  sent: ClientOp[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;

  open(): void {
    this.onopen?.();
  }

  send(data: string): void {
    this.sent.push(JSON.parse(data) as ClientOp);
  }

  close(): void {
    this.onclose?.();
  }

  inject(ev: ServerEvent): void {
    this.onmessage?.({ data: JSON.stringify(ev) });
  }
}
