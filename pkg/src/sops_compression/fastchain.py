"""Compiled version of the chain for long runs.

Validity of a move and its triangle change depend only on which of the 8
cells around the pair (src, dst) are occupied.  Both are tabulated once per
direction from the reference predicates in :mod:`dynamics`, and the kernel
looks them up from an occupancy grid.  The grid is a torus large enough that
a connected configuration never sees its own image.

Given the same draw stream the kernel makes exactly the same moves as
:class:`dynamics.Chain`.
"""

from __future__ import annotations

from functools import lru_cache
from typing import List, Optional

import numba
import numpy as np

from .configuration import Configuration, cells_of, triangle_count
from .dynamics import condition_one, delta_triangles, satisfies_property1, satisfies_property2
from .lattice import DIRECTIONS, Cell, extended_neighborhood, neighbor
from .rng import DrawStream, make_rng

_DQ = np.array([d[0] for d in DIRECTIONS], dtype=np.int64)
_DR = np.array([d[1] for d in DIRECTIONS], dtype=np.int64)


def ring_offsets():
    """Offsets of the 8 ring cells relative to the mover, per direction."""
    dq = np.zeros((6, 8), dtype=np.int64)
    dr = np.zeros((6, 8), dtype=np.int64)
    for d in range(6):
        ring = extended_neighborhood((0, 0), neighbor((0, 0), d))
        for k, (q, r) in enumerate(ring):
            dq[d, k] = q
            dr[d, k] = r
    return dq, dr


@lru_cache(maxsize=None)
def move_tables():
    """``valid[d, mask]`` and ``dt[d, mask]`` from the reference predicates."""
    valid = np.zeros((6, 256), dtype=np.bool_)
    dt = np.zeros((6, 256), dtype=np.int64)
    src = (0, 0)
    for d in range(6):
        dst = neighbor(src, d)
        ring = extended_neighborhood(src, dst)
        for mask in range(256):
            cells = {src} | {ring[k] for k in range(8) if mask >> k & 1}
            ok = condition_one(cells, src, dst) and (
                satisfies_property1(cells, src, dst) or satisfies_property2(cells, src, dst)
            )
            valid[d, mask] = ok
            dt[d, mask] = delta_triangles(cells, src, dst)
    valid.setflags(write=False)
    dt.setflags(write=False)
    return valid, dt


@numba.njit(cache=True)
def _kernel(grid, wrap, pq, pr, idx, dirs, qs, valid, dtab, ring_dq, ring_dr, dq, dr, lam_pow, tri, stop_tri):
    """Run the draws in order; stop early once ``tri >= stop_tri``.

    Returns (steps consumed, triangles, accepted moves).
    """
    accepted = 0
    count = idx.shape[0]
    for s in range(count):
        i = idx[s]
        d = dirs[s]
        q0 = pq[i]
        r0 = pr[i]
        q1 = q0 + dq[d]
        r1 = r0 + dr[d]
        if grid[q1 & wrap, r1 & wrap]:
            continue
        mask = 0
        for k in range(8):
            if grid[(q0 + ring_dq[d, k]) & wrap, (r0 + ring_dr[d, k]) & wrap]:
                mask |= 1 << k
        if not valid[d, mask]:
            continue
        delta = dtab[d, mask]
        if qs[s] < lam_pow[delta + 6]:
            grid[q0 & wrap, r0 & wrap] = 0
            grid[q1 & wrap, r1 & wrap] = 1
            pq[i] = q1
            pr[i] = r1
            tri += delta
            accepted += 1
            if tri >= stop_tri:
                return s + 1, tri, accepted
    return count, tri, accepted


class FastChain:
    """Chain state on a torus grid, advanced by the compiled kernel."""

    def __init__(self, sigma, lam: float, seed: int = 0, rng: Optional[np.random.Generator] = None):
        if not lam > 0:
            raise ValueError("lambda must be positive")
        positions = sorted(cells_of(sigma))
        self.n = len(positions)
        self.lam = float(lam)
        size = 16
        while size < 2 * self.n + 8:
            size *= 2
        self.size = size
        self.grid = np.zeros((size, size), dtype=np.uint8)
        self.pq = np.array([c[0] for c in positions], dtype=np.int64)
        self.pr = np.array([c[1] for c in positions], dtype=np.int64)
        self.grid[self.pq & (size - 1), self.pr & (size - 1)] = 1
        self.triangles = triangle_count(set(positions))
        self.draws = DrawStream(rng if rng is not None else make_rng(seed), self.n)
        self.steps = 0
        self.accepted = 0
        self._valid, self._dt = move_tables()
        self._ring_dq, self._ring_dr = ring_offsets()
        # same expression as the reference chain, so comparisons agree bit for bit
        self._lam_pow = np.array([self.lam ** (k - 6) for k in range(13)], dtype=np.float64)

    @property
    def perimeter(self) -> int:
        return 2 * self.n - self.triangles - 2

    @property
    def edges(self) -> int:
        return self.triangles + self.n - 1

    @property
    def positions(self) -> List[Cell]:
        return list(zip(self.pq.tolist(), self.pr.tolist()))

    def configuration(self) -> Configuration:
        return Configuration(self.positions)

    def run(self, steps: int, stop_perimeter: Optional[int] = None) -> int:
        """Advance up to ``steps`` iterations; returns the number performed.

        With ``stop_perimeter`` the run halts right after the first move that
        brings the perimeter to that value or below.
        """
        if stop_perimeter is None:
            stop_tri = np.iinfo(np.int64).max
        else:
            stop_tri = 2 * self.n - 2 - int(stop_perimeter)
            if self.triangles >= stop_tri:
                return 0
        done = 0
        while done < steps:
            idx, dirs, qs = self.draws.take(steps - done)
            used, tri, acc = _kernel(
                self.grid, self.size - 1, self.pq, self.pr, idx, dirs, qs,
                self._valid, self._dt, self._ring_dq, self._ring_dr, _DQ, _DR,
                self._lam_pow, self.triangles, stop_tri,
            )
            self.triangles = int(tri)
            self.accepted += int(acc)
            done += int(used)
            if used < len(idx):
                # rewind the unused draws so the stream stays aligned
                self.draws.pos -= len(idx) - int(used)
                break
        self.steps += done
        return done
