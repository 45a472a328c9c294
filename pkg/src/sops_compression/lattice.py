"""Geometry of the triangular lattice in axial coordinates.

A cell is a pair ``(q, r)``.  Directions are indexed 0..5 counterclockwise
starting from east, so ``DIRECTIONS[d]`` is the offset of the neighbor in
direction ``d``.  The standard embedding puts cell ``(q, r)`` at
``x = q + r/2``, ``y = r * sqrt(3)/2``.

Triangular faces are exactly the triples ``{c, c + e_d, c + e_(d+1)}``.
"""

from __future__ import annotations

import math
from typing import Iterable, List, Optional, Set, Tuple

Cell = Tuple[int, int]

DIRECTIONS: Tuple[Cell, ...] = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))

# Direction names in the lattice picture where the vertical axis runs between
# directions 1 and 2.  The normalizer speaks in these terms.
EAST, NORTHEAST, NORTHWEST, WEST, SOUTHWEST, SOUTHEAST = range(6)

_DIR_INDEX = {off: d for d, off in enumerate(DIRECTIONS)}
SQRT3_2 = math.sqrt(3.0) / 2.0


class LatticeError(ValueError):
    pass


def opposite(d: int) -> int:
    return (d + 3) % 6


def neighbor(c: Cell, d: int) -> Cell:
    dq, dr = DIRECTIONS[d % 6]
    return (c[0] + dq, c[1] + dr)


def neighbors(c: Cell) -> List[Cell]:
    """The six neighbors of ``c`` in direction order."""
    q, r = c
    return [(q + dq, r + dr) for dq, dr in DIRECTIONS]


def direction_between(a: Cell, b: Cell) -> Optional[int]:
    """Direction ``d`` with ``neighbor(a, d) == b``, or None if not adjacent."""
    return _DIR_INDEX.get((b[0] - a[0], b[1] - a[1]))


def are_adjacent(a: Cell, b: Cell) -> bool:
    return (b[0] - a[0], b[1] - a[1]) in _DIR_INDEX


def distance(a: Cell, b: Cell) -> int:
    """Graph distance on the lattice."""
    dq = b[0] - a[0]
    dr = b[1] - a[1]
    return (abs(dq) + abs(dr) + abs(dq + dr)) // 2


def common_neighbors(a: Cell, b: Cell) -> Set[Cell]:
    if a == b:
        raise LatticeError("common_neighbors needs two distinct cells")
    if distance(a, b) > 2:
        return set()
    return set(neighbors(a)) & set(neighbors(b))


def extended_neighborhood(a: Cell, b: Cell) -> List[Cell]:
    """The 8 cells around the adjacent pair ``a, b`` in counterclockwise order.

    Positions 0 and 4 are the two common neighbors; positions 1..3 touch only
    ``a`` and positions 5..7 touch only ``b``.
    """
    d = direction_between(a, b)
    if d is None:
        raise LatticeError(f"cells {a} and {b} are not adjacent")
    return [
        neighbor(a, d + 1),
        neighbor(a, d + 2),
        neighbor(a, d + 3),
        neighbor(a, d + 4),
        neighbor(a, d + 5),
        neighbor(b, d + 5),
        neighbor(b, d),
        neighbor(b, d + 1),
    ]


def faces_at(c: Cell) -> List[Tuple[Cell, Cell]]:
    """The six triangular faces at ``c``, each as the pair of other corners."""
    ns = neighbors(c)
    return [(ns[d], ns[(d + 1) % 6]) for d in range(6)]


def rotate(c: Cell, k: int = 1) -> Cell:
    """Rotate ``c`` about the origin by ``k`` sixths of a turn counterclockwise."""
    q, r = c
    for _ in range(k % 6):
        q, r = -r, q + r
    return (q, r)


def translate(cells: Iterable[Cell], dq: int, dr: int) -> List[Cell]:
    return [(q + dq, r + dr) for q, r in cells]


def to_cartesian(c: Cell) -> Tuple[float, float]:
    q, r = c
    return (q + r / 2.0, r * SQRT3_2)


def column(c: Cell) -> int:
    """Index of the vertical column containing ``c`` (constant along NW/SE)."""
    return c[0] + c[1]


def anchor_key(c: Cell) -> Tuple[int, int]:
    """Sort key for "lowest leftmost": leftmost column first, then lowest."""
    return (c[0] + c[1], c[1])
