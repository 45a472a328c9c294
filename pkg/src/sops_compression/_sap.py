"""Compiled self-avoiding walk counter on the honeycomb lattice."""

from __future__ import annotations

import numba
import numpy as np


def _build(radius: int):
    """Vertex table of the honeycomb patch within ``radius`` of the origin.

    Vertices are the lattice faces: kind 0 is {c, c+e0, c+e1} and kind 1 is
    {c, c+e0, c+e5}, keyed by their corner ``c``.
    """
    side = 2 * radius + 3
    def vid(kind, q, r):
        return (((q + radius + 1) * side) + (r + radius + 1)) * 2 + kind
    total = side * side * 2
    nbr = -np.ones((total, 3), dtype=np.int64)
    for q in range(-radius, radius + 1):
        for r in range(-radius, radius + 1):
            for kind in (0, 1):
                if kind == 0:
                    ns = [(1, q, r), (1, q - 1, r + 1), (1, q, r + 1)]
                else:
                    ns = [(0, q, r), (0, q + 1, r - 1), (0, q, r - 1)]
                for k, (kk, qq, rr) in enumerate(ns):
                    if -radius <= qq <= radius and -radius <= rr <= radius:
                        nbr[vid(kind, q, r), k] = vid(kk, qq, rr)
    origin = vid(0, 0, 0)
    dist = np.full(total, 1 << 30, dtype=np.int64)
    dist[origin] = 0
    frontier = [origin]
    while frontier:
        nxt = []
        for v in frontier:
            for w in nbr[v]:
                if w >= 0 and dist[w] > dist[v] + 1:
                    dist[w] = dist[v] + 1
                    nxt.append(int(w))
        frontier = nxt
    return nbr, dist, origin


@numba.njit(cache=True)
def _count(nbr, dist, origin, steps):
    """Walks of ``steps`` steps from origin, self-avoiding, ending next to it."""
    total = nbr.shape[0]
    used = np.zeros(total, dtype=np.bool_)
    path = np.zeros(steps + 1, dtype=np.int64)
    choice = np.zeros(steps + 1, dtype=np.int64)
    used[origin] = True
    path[0] = origin
    depth = 0
    choice[0] = 0
    count = 0
    while depth >= 0:
        if depth == steps:
            v = path[depth]
            if dist[v] == 1:
                count += 1
            used[v] = False
            depth -= 1
            continue
        k = choice[depth]
        if k == 3:
            if depth > 0:
                used[path[depth]] = False
            depth -= 1
            continue
        choice[depth] = k + 1
        w = nbr[path[depth], k]
        if w < 0 or used[w]:
            continue
        rem = steps - depth - 1
        if dist[w] > rem + 1:
            continue
        depth += 1
        path[depth] = w
        used[w] = True
        choice[depth] = 0
    return count


def count_returning_walks(length: int) -> int:
    """Self-avoiding walks of ``length - 1`` steps from a fixed vertex that end adjacent to it."""
    nbr, dist, origin = _build(length)
    return int(_count(nbr, dist, origin, length - 1))
