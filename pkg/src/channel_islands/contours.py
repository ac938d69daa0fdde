"""Marching squares on rectangular lattices, optionally periodic in the first index."""
from __future__ import annotations

from collections import defaultdict

import numpy as np

# corner bits: b0=(i,j), b1=(i+1,j), b2=(i+1,j+1), b3=(i,j+1)
# edges: 0 bottom (i,j)-(i+1,j), 1 right (i+1,j)-(i+1,j+1), 2 top (i,j+1)-(i+1,j+1), 3 left (i,j)-(i,j+1)
_CASES = {
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)], 6: [(0, 2)], 7: [(3, 2)],
    8: [(2, 3)], 9: [(0, 2)], 11: [(1, 2)], 12: [(3, 1)], 13: [(0, 1)], 14: [(3, 0)],
}
# ambiguous cells, keyed by (case, centre_above)
_SADDLES = {
    (5, True): [(0, 1), (2, 3)],
    (5, False): [(3, 0), (1, 2)],
    (10, True): [(3, 0), (1, 2)],
    (10, False): [(0, 1), (2, 3)],
}


def _edge_key(i, j, e, nx, periodic):
    ip = (i + 1) % nx if periodic else i + 1
    if e == 0:
        return ("x", i, j)
    if e == 1:
        return ("y", ip, j)
    if e == 2:
        return ("x", i, j + 1)
    return ("y", i, j)


def _edge_point(key, v, level, nx, periodic):
    kind, i, j = key
    if kind == "x":
        ip = (i + 1) % nx if periodic else i + 1
        a, b = v[i, j], v[ip, j]
        return i + (level - a) / (b - a), float(j)
    a, b = v[i, j], v[i, j + 1]
    return float(i), j + (level - a) / (b - a)


def marching_squares(v: np.ndarray, level: float, periodic: bool = False) -> list[dict]:
    """Level-set polylines of lattice data ``v[i, j]`` in fractional index coordinates.

    Nodes with value >= level count as above.  Ambiguous cells are split
    with the midpoint rule: the cell centre value is the mean of its four
    corners.  With ``periodic`` the first index wraps, and the returned
    i-coordinates are unwrapped along each chain; ``winding`` is the net
    number of periods traversed by a closed chain.
    """
    v = np.asarray(v, dtype=float)
    nx, ny = v.shape
    ncx = nx if periodic else nx - 1
    I, J = np.meshgrid(np.arange(ncx), np.arange(ny - 1), indexing="ij")
    Ip = (I + 1) % nx
    c0, c1, c2, c3 = v[I, J], v[Ip, J], v[Ip, J + 1], v[I, J + 1]
    case = (c0 >= level) * 1 + (c1 >= level) * 2 + (c2 >= level) * 4 + (c3 >= level) * 8
    centre = 0.25 * (c0 + c1 + c2 + c3) >= level

    segs = []
    for i, j in zip(*np.nonzero((case != 0) & (case != 15))):
        c = int(case[i, j])
        pairs = _SADDLES[(c, bool(centre[i, j]))] if c in (5, 10) else _CASES[c]
        for ea, eb in pairs:
            segs.append((_edge_key(i, j, ea, nx, periodic), _edge_key(i, j, eb, nx, periodic)))

    adj = defaultdict(list)
    for k, (a, b) in enumerate(segs):
        adj[a].append(k)
        adj[b].append(k)
    used = np.zeros(len(segs), dtype=bool)

    def walk(start):
        keys = [start]
        cur = start
        while True:
            nxt = [k for k in adj[cur] if not used[k]]
            if not nxt:
                return keys
            k = nxt[0]
            used[k] = True
            a, b = segs[k]
            cur = b if a == cur else a
            keys.append(cur)
            if cur == start:
                return keys

    chains = []
    ends = sorted(k for k, lst in adj.items() if len(lst) == 1)
    for key in ends:
        if any(not used[k] for k in adj[key]):
            chains.append((walk(key), False))
    for k in range(len(segs)):
        if not used[k]:
            chains.append((walk(segs[k][0]), True))

    out = []
    for keys, closed in chains:
        pts = np.array([_edge_point(key, v, level, nx, periodic) for key in keys])
        if periodic and len(pts) > 1:
            jumps = np.diff(pts[:, 0])
            shift = -nx * np.rint(jumps / nx)
            pts[1:, 0] += np.cumsum(shift)
        winding = int(np.rint((pts[-1, 0] - pts[0, 0]) / nx)) if (closed and periodic) else 0
        out.append({"points": pts, "closed": closed, "winding": winding})
    return out


def point_in_polygon(px: float, py: float, poly: np.ndarray) -> bool:
    """Even-odd ray casting test."""
    x, y = poly[:, 0], poly[:, 1]
    x2, y2 = np.roll(x, -1), np.roll(y, -1)
    cross = (y > py) != (y2 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = x + (py - y) * (x2 - x) / (y2 - y)
    return bool(np.count_nonzero(cross & (px < xi)) % 2)
