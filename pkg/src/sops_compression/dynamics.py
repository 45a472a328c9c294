"""Move validity and the sequential Markov chain.

A move relocates the particle at ``src`` to the adjacent empty cell ``dst``.
Every check is made on the occupancy with the mover removed, so the mover
never counts as its own neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import AbstractSet, Iterator, List, Optional, Tuple

import numpy as np

from .configuration import Configuration, canonical_key, cells_of, triangle_count
from .lattice import Cell, are_adjacent, direction_between, extended_neighborhood, neighbor, neighbors
from .rng import DrawStream, make_rng

CellSet = AbstractSet[Cell]


@dataclass(frozen=True)
class Move:
    src: Cell
    dst: Cell
    dt: int = 0

    @property
    def direction(self) -> int:
        return direction_between(self.src, self.dst)


@dataclass(frozen=True)
class ChainParams:
    lam: float
    seed: int = 0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")


def _connected_within(cells: List[Cell]) -> bool:
    """Whether ``cells`` induce a connected subgraph of the lattice."""
    if not cells:
        return True
    pool = set(cells)
    seen = {cells[0]}
    todo = [cells[0]]
    while todo:
        c = todo.pop()
        for x in neighbors(c):
            if x in pool and x not in seen:
                seen.add(x)
                todo.append(x)
    return len(seen) == len(pool)


def shared_occupied(cells: CellSet, src: Cell, dst: Cell) -> List[Cell]:
    """Occupied members of the two common neighbors of ``src`` and ``dst``."""
    d = direction_between(src, dst)
    return [x for x in (neighbor(src, d + 1), neighbor(src, d - 1)) if x in cells and x != src]


def satisfies_property1(sigma, src: Cell, dst: Cell) -> bool:
    """|S| in {1, 2} and every ring particle reaches S inside the 8-cell ring."""
    cells = cells_of(sigma)
    shared = shared_occupied(cells, src, dst)
    if not shared:
        return False
    ring = [x for x in extended_neighborhood(src, dst) if x in cells and x != src]
    pool = set(ring)
    seen = set(shared)
    todo = list(shared)
    while todo:
        c = todo.pop()
        for x in neighbors(c):
            if x in pool and x not in seen:
                seen.add(x)
                todo.append(x)
    return len(seen) == len(pool)


def satisfies_property2(sigma, src: Cell, dst: Cell) -> bool:
    """|S| = 0, both cells have a neighbor, and each one's neighbors are connected."""
    cells = cells_of(sigma)
    if shared_occupied(cells, src, dst):
        return False
    around_src = [x for x in neighbors(src) if x in cells and x != dst]
    around_dst = [x for x in neighbors(dst) if x in cells and x != src]
    if not around_src or not around_dst:
        return False
    return _connected_within(around_src) and _connected_within(around_dst)


def condition_one(cells: CellSet, src: Cell, dst: Cell) -> bool:
    """The mover does not have five other neighbors at ``src``."""
    return sum(1 for x in neighbors(src) if x in cells and x != dst) != 5


def delta_triangles(sigma, src: Cell, dst: Cell) -> int:
    """t' - t: faces at ``dst`` minus faces at ``src``, counting other particles only."""
    cells = cells_of(sigma)
    a = [x in cells and x != src for x in neighbors(dst)]
    b = [x in cells for x in neighbors(src)]
    ta = sum(1 for d in range(6) if a[d] and a[(d + 1) % 6])
    tb = sum(1 for d in range(6) if b[d] and b[(d + 1) % 6])
    return ta - tb


def is_valid_move(sigma, move, dst: Optional[Cell] = None) -> bool:
    """Condition (1) and (Property 1 or Property 2); acceptance is separate.

    Accepts either a :class:`Move` or ``(src, dst)`` as two positional cells.
    """
    cells = cells_of(sigma)
    if dst is None:
        src, dst = move.src, move.dst
    else:
        src = move
    if src not in cells or dst in cells or not are_adjacent(src, dst):
        return False
    if not condition_one(cells, src, dst):
        return False
    return satisfies_property1(cells, src, dst) or satisfies_property2(cells, src, dst)


def acceptance(lam: float, dt: int) -> float:
    return min(1.0, lam ** dt)


def candidate_moves(sigma) -> Iterator[Tuple[Cell, int, Cell]]:
    """All ``(src, d, dst)`` with ``dst`` empty, in a fixed order."""
    cells = cells_of(sigma)
    for src in sorted(cells):
        for d in range(6):
            dst = neighbor(src, d)
            if dst not in cells:
                yield src, d, dst


def valid_moves(sigma) -> List[Move]:
    cells = cells_of(sigma)
    out = []
    for src, _, dst in candidate_moves(cells):
        if is_valid_move(cells, src, dst):
            out.append(Move(src, dst, delta_triangles(cells, src, dst)))
    return out


def transition_probability(sigma, tau, lam: float) -> float:
    """One-step probability that the chain maps ``sigma`` to ``tau``.

    Configurations are compared up to translation.
    """
    a = cells_of(sigma)
    n = len(a)
    if len(cells_of(tau)) != n:
        return 0.0
    target = canonical_key(tau)
    stay = canonical_key(a) == target
    hit_mass = 0.0
    leave_mass = 0.0
    work = set(a)
    for src, _, dst in candidate_moves(a):
        if not is_valid_move(a, src, dst):
            continue
        p = acceptance(lam, delta_triangles(a, src, dst)) / (6 * n)
        work.remove(src)
        work.add(dst)
        hit = canonical_key(work) == target
        work.remove(dst)
        work.add(src)
        if hit:
            hit_mass += p
        else:
            leave_mass += p
    if stay:
        return 1.0 - leave_mass
    return hit_mass


class Chain:
    """Pure-Python reference implementation of the chain.

    Particle identities are kept in a list so that the draw sequence (particle
    index, direction, q) is shared exactly with the compiled kernel.
    """

    def __init__(self, sigma, lam: float, seed: int = 0, rng: Optional[np.random.Generator] = None):
        self.params = ChainParams(lam, seed)
        self.positions: List[Cell] = sorted(cells_of(sigma))
        self.cells = set(self.positions)
        self.n = len(self.positions)
        self.draws = DrawStream(rng if rng is not None else make_rng(seed), self.n)
        self.steps = 0
        self.accepted = 0
        self.triangles = triangle_count(self.cells)

    @property
    def perimeter(self) -> int:
        return 2 * self.n - self.triangles - 2

    @property
    def edges(self) -> int:
        return self.triangles + self.n - 1

    def configuration(self) -> Configuration:
        return Configuration(self.cells)

    def apply(self, i: int, d: int, q: float) -> Optional[Move]:
        """One iteration with the given draws; returns the move if one happened."""
        src = self.positions[i]
        dst = neighbor(src, d)
        cells = self.cells
        if dst in cells:
            return None
        if not is_valid_move(cells, src, dst):
            return None
        dt = delta_triangles(cells, src, dst)
        if not q < self.params.lam ** dt:
            return None
        cells.remove(src)
        cells.add(dst)
        self.positions[i] = dst
        self.triangles += dt
        self.accepted += 1
        return Move(src, dst, dt)

    def step(self) -> Optional[Move]:
        i, d, q = self.draws.next()
        self.steps += 1
        return self.apply(i, d, q)

    def run(self, steps: int) -> None:
        for _ in range(steps):
            self.step()


def step(sigma, params: ChainParams, rng: Optional[np.random.Generator] = None) -> Configuration:
    """One iteration of the chain on a copy of ``sigma``."""
    rng = rng if rng is not None else make_rng(params.seed)
    cells = set(cells_of(sigma))
    positions = sorted(cells)
    i = int(rng.integers(0, len(positions)))
    d = int(rng.integers(0, 6))
    q = float(rng.random())
    src = positions[i]
    dst = neighbor(src, d)
    if dst not in cells and is_valid_move(cells, src, dst):
        if q < params.lam ** delta_triangles(cells, src, dst):
            cells.remove(src)
            cells.add(dst)
    return Configuration(cells)
