"""256-case marching cubes tables, generated at import time.

Rather than transcribing the classic tables by hand, each case is built by
tracing the isosurface boundary across the cube's six faces: crossed face
edges are paired into directed segments (on the four-crossing ambiguous
face, the rule is to always separate the two inside corners), the segments
stitch into closed cycles, and each cycle is fan-triangulated.

Because the ambiguous-face rule depends only on the face's own values, the
two cells sharing a face always agree on its connectivity, so extracted
surfaces have no cracks. Winding is chosen so triangle normals point away
from the inside (> iso) region.

Corner numbering (bit i of a case index = corner i is inside):

      7-------6          z
     /|      /|          |  y
    4-------5 |          | /
    | 3-----|-2          o--- x
    |/      |/
    0-------1

Edge numbering follows the usual convention: 0..3 around the bottom ring,
4..7 around the top ring, 8..11 vertical.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "CORNERS",
    "EDGES",
    "EDGE_AXIS",
    "EDGE_OFFSET",
    "TRI_TABLE",
    "TRI_COUNT",
    "MAX_TRIS_PER_CELL",
]

CORNERS = (
    (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
    (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
)

EDGES = (
    (0, 1), (1, 2), (2, 3), (3, 0),
    (4, 5), (5, 6), (6, 7), (7, 4),
    (0, 4), (1, 5), (2, 6), (3, 7),
)

# (outward normal, corners) per cube face
_FACES = (
    ((-1, 0, 0), (0, 3, 7, 4)),
    ((+1, 0, 0), (1, 2, 6, 5)),
    ((0, -1, 0), (0, 1, 5, 4)),
    ((0, +1, 0), (2, 3, 7, 6)),
    ((0, 0, -1), (0, 1, 2, 3)),
    ((0, 0, +1), (4, 5, 6, 7)),
)


def _edge_axis_offset(edge):
    a, b = (CORNERS[c] for c in EDGES[edge])
    axis = next(i for i in range(3) if a[i] != b[i])
    offset = tuple(min(a[i], b[i]) for i in range(3))
    return axis, offset


EDGE_AXIS = np.array([_edge_axis_offset(e)[0] for e in range(12)], dtype=np.int8)
EDGE_OFFSET = np.array([_edge_axis_offset(e)[1] for e in range(12)], dtype=np.int8)

_EDGE_MID = np.array(
    [(np.array(CORNERS[a], float) + np.array(CORNERS[b], float)) / 2.0 for a, b in EDGES]
)


def _face_segments(inside, normal, corners):
    """Directed boundary segments (from_edge, to_edge) on one face."""
    cs = set(corners)
    face_edges = [e for e, (a, b) in enumerate(EDGES) if a in cs and b in cs]
    crossing = [e for e in face_edges if inside[EDGES[e][0]] != inside[EDGES[e][1]]]
    if not crossing:
        return []
    n = np.array(normal, float)
    center = np.mean([CORNERS[c] for c in corners], axis=0)
    ins = [c for c in corners if inside[c]]
    outs = [c for c in corners if not inside[c]]
    if len(crossing) == 2:
        pairs = [(crossing[0], crossing[1])]
        refs = [np.mean([CORNERS[c] for c in outs], axis=0) - np.mean([CORNERS[c] for c in ins], axis=0)]
    elif len(crossing) == 4:
        # ambiguous face: two diagonal inside corners, cut each off separately
        pairs, refs = [], []
        for c in ins:
            adj = [e for e in crossing if c in EDGES[e]]
            assert len(adj) == 2
            pairs.append((adj[0], adj[1]))
            refs.append(center - np.array(CORNERS[c], float))
    else:  # pragma: no cover - impossible by parity
        raise AssertionError(f"face with {len(crossing)} crossings")

    segments = []
    for (e1, e2), ref in zip(pairs, refs):
        d = _EDGE_MID[e2] - _EDGE_MID[e1]
        side = float(np.dot(np.cross(n, d), ref))
        assert side != 0.0
        # orient so cross(face normal, direction) points from inside to outside,
        # which makes the stitched cycles wind with normals away from the inside
        segments.append((e1, e2) if side > 0 else (e2, e1))
    return segments


def _case_triangles(case):
    inside = [(case >> c) & 1 == 1 for c in range(8)]
    successor = {}
    for normal, corners in _FACES:
        for a, b in _face_segments(inside, normal, corners):
            assert a not in successor
            successor[a] = b
    assert set(successor) == set(successor.values())

    triangles = []
    remaining = set(successor)
    while remaining:
        start = min(remaining)
        cycle = [start]
        cur = successor[start]
        while cur != start:
            cycle.append(cur)
            cur = successor[cur]
        remaining.difference_update(cycle)
        assert len(cycle) >= 3
        for i in range(1, len(cycle) - 1):
            triangles.append((cycle[0], cycle[i], cycle[i + 1]))
    return triangles


def _build_tables():
    cases = [_case_triangles(c) for c in range(256)]
    assert cases[0] == [] and cases[255] == []
    max_tris = max(len(t) for t in cases)
    table = np.full((256, max_tris * 3), -1, dtype=np.int8)
    counts = np.zeros(256, dtype=np.int8)
    for c, tris in enumerate(cases):
        counts[c] = len(tris)
        for t, tri in enumerate(tris):
            table[c, 3 * t : 3 * t + 3] = tri
    return table, counts, max_tris


TRI_TABLE, TRI_COUNT, MAX_TRIS_PER_CELL = _build_tables()
