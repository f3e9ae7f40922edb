/** Minimal binary STL reader for mesh payload frames: 80-byte header,
 * uint32 triangle count, then 50-byte records (normal + 3 corners + attr).
 * Returns a triangle soup ready for a render buffer. */

export interface StlMesh {
  triangleCount: number;
  positions: Float32Array; // 9 floats per triangle
}

export function parseBinaryStl(buf: ArrayBuffer): StlMesh {
  if (buf.byteLength < 84) throw new Error(`truncated STL: ${buf.byteLength} bytes`);
  const view = new DataView(buf);
  const count = view.getUint32(80, true);
  if (buf.byteLength !== 84 + 50 * count) {
    throw new Error(`bad STL length ${buf.byteLength} for ${count} triangles`);
  }
  const positions = new Float32Array(count * 9);
  for (let t = 0; t < count; t++) {
    const base = 84 + 50 * t + 12; // skip facet normal
    for (let c = 0; c < 9; c++) {
      positions[t * 9 + c] = view.getFloat32(base + c * 4, true);
    }
  }
  return { triangleCount: count, positions };
}

/** Slice a triangle range [start, end) out of a soup (mesh part view). */
export function slicePart(mesh: StlMesh, start: number, end: number): StlMesh {
  const s = Math.max(0, start);
  const e = Math.min(mesh.triangleCount, end);
  return { triangleCount: e - s, positions: mesh.positions.slice(s * 9, e * 9) };
}
