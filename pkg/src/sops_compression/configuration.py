"""Particle configurations and their static metrics.

Functions here accept either a :class:`Configuration` or any set of cells.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import AbstractSet, Iterable, List, Optional, Sequence, Tuple, Union

from .lattice import DIRECTIONS, Cell, anchor_key, direction_between, neighbor, neighbors

CellSet = AbstractSet[Cell]


class ConfigurationError(ValueError):
    pass


class Configuration:
    """The set of occupied cells of a particle system."""

    __slots__ = ("occupied",)

    def __init__(self, cells: Iterable[Cell] = ()):
        self.occupied = {(int(q), int(r)) for q, r in cells}

    @property
    def n(self) -> int:
        return len(self.occupied)

    def __len__(self) -> int:
        return len(self.occupied)

    def __contains__(self, c) -> bool:
        return c in self.occupied

    def __iter__(self):
        return iter(self.occupied)

    def __eq__(self, other) -> bool:
        if isinstance(other, Configuration):
            return self.occupied == other.occupied
        return NotImplemented

    def __repr__(self) -> str:
        return f"Configuration({sorted(self.occupied)})"

    def copy(self) -> "Configuration":
        return Configuration(self.occupied)

    def move(self, src: Cell, dst: Cell) -> None:
        self.occupied.remove(src)
        self.occupied.add(dst)

    def key(self) -> Tuple[Cell, ...]:
        return canonical_key(self.occupied)

    def metrics(self) -> "Metrics":
        return metrics(self.occupied)


def cells_of(sigma: Union[Configuration, CellSet, Iterable[Cell]]) -> CellSet:
    if isinstance(sigma, Configuration):
        return sigma.occupied
    if isinstance(sigma, (set, frozenset)):
        return sigma
    return set(sigma)


def line(n: int, direction: int = 0, start: Cell = (0, 0)) -> Configuration:
    """Straight line of ``n`` particles."""
    cells = [start]
    for _ in range(n - 1):
        cells.append(neighbor(cells[-1], direction))
    return Configuration(cells)


def hexagon(radius: int = 1, center: Cell = (0, 0)) -> Configuration:
    """Filled hexagon of the given radius (radius 1 is seven cells)."""
    cq, cr = center
    cells = []
    for dq in range(-radius, radius + 1):
        for dr in range(max(-radius, -dq - radius), min(radius, -dq + radius) + 1):
            cells.append((cq + dq, cr + dr))
    return Configuration(cells)


# ---------------------------------------------------------------- counting


def edge_count(sigma) -> int:
    cells = cells_of(sigma)
    count = 0
    for q, r in cells:
        # each edge counted from one endpoint only: directions 0, 1, 2
        if (q + 1, r) in cells:
            count += 1
        if (q, r + 1) in cells:
            count += 1
        if (q - 1, r + 1) in cells:
            count += 1
    return count


def triangle_count(sigma) -> int:
    cells = cells_of(sigma)
    count = 0
    for q, r in cells:
        # up face {c, c+e0, c+e1} and down face {c, c+e0, c+e5}
        if (q + 1, r) in cells:
            if (q, r + 1) in cells:
                count += 1
            if (q + 1, r - 1) in cells:
                count += 1
    return count


def triangles_at(cells: CellSet, c: Cell, exclude: Optional[Cell] = None) -> int:
    """Faces at ``c`` whose two other corners are occupied (ignoring ``exclude``)."""
    ns = [x in cells and x != exclude for x in neighbors(c)]
    return sum(1 for d in range(6) if ns[d] and ns[(d + 1) % 6])


def occupied_neighbors(cells: CellSet, c: Cell, exclude: Optional[Cell] = None) -> List[Cell]:
    return [x for x in neighbors(c) if x in cells and x != exclude]


# ---------------------------------------------------------- connectivity


def is_connected(sigma) -> bool:
    cells = cells_of(sigma)
    if not cells:
        return True
    start = next(iter(cells))
    seen = {start}
    todo = [start]
    while todo:
        c = todo.pop()
        for x in neighbors(c):
            if x in cells and x not in seen:
                seen.add(x)
                todo.append(x)
    return len(seen) == len(cells)


def _bounding_box(cells: CellSet, pad: int = 1):
    qs = [c[0] for c in cells]
    rs = [c[1] for c in cells]
    return min(qs) - pad, max(qs) + pad, min(rs) - pad, max(rs) + pad


def has_hole(sigma) -> bool:
    """True iff some empty cell is cut off from infinity."""
    cells = cells_of(sigma)
    if len(cells) < 6:
        return False
    q0, q1, r0, r1 = _bounding_box(cells)
    seen = set()
    todo = deque()
    for q in range(q0, q1 + 1):
        for r in (r0, r1):
            if (q, r) not in seen:
                seen.add((q, r))
                todo.append((q, r))
    for r in range(r0, r1 + 1):
        for q in (q0, q1):
            if (q, r) not in seen:
                seen.add((q, r))
                todo.append((q, r))
    while todo:
        q, r = todo.popleft()
        for dq, dr in DIRECTIONS:
            x = (q + dq, r + dr)
            if x in seen or x in cells:
                continue
            if q0 <= x[0] <= q1 and r0 <= x[1] <= r1:
                seen.add(x)
                todo.append(x)
    area = (q1 - q0 + 1) * (r1 - r0 + 1)
    return len(seen) + len(cells) < area


def neighbor_arcs(cells: CellSet, c: Cell, exclude: Optional[Cell] = None) -> int:
    """Number of maximal runs of occupied cells in the cyclic neighborhood of ``c``."""
    occ = [x in cells and x != exclude for x in neighbors(c)]
    if all(occ):
        return 1
    return sum(1 for d in range(6) if occ[d] and not occ[d - 1])


def is_gap(sigma, cell: Cell) -> bool:
    """True iff placing a particle at the empty ``cell`` would create a hole."""
    cells = cells_of(sigma)
    if cell in cells:
        raise ConfigurationError(f"{cell} is occupied")
    return has_hole(set(cells) | {cell})


def is_gap_local(cells: CellSet, cell: Cell) -> bool:
    """Local test for :func:`is_gap`, exact when ``cells`` is connected and hole-free.

    Filling ``cell`` closes a loop exactly when its occupied neighbors fall
    into two or more separate arcs around it.
    """
    return neighbor_arcs(cells, cell) >= 2


# ---------------------------------------------------------------- anchors


def anchor(sigma) -> Cell:
    """Lowest particle of the leftmost column."""
    return min(cells_of(sigma), key=anchor_key)


# clockwise scan starting at the cell directly above the anchor
_FIRST_NEIGHBOR_SCAN = (2, 1, 0, 5, 4, 3)


def first_neighbor(sigma) -> Cell:
    cells = cells_of(sigma)
    if len(cells) < 2:
        raise ConfigurationError("first_neighbor needs at least two particles")
    s = anchor(cells)
    for d in _FIRST_NEIGHBOR_SCAN:
        x = neighbor(s, d)
        if x in cells:
            return x
    raise ConfigurationError("anchor has no neighbor; configuration is disconnected")


def canonical_key(sigma) -> Tuple[Cell, ...]:
    cells = cells_of(sigma)
    aq, ar = anchor(cells)
    return tuple(sorted((q - aq, r - ar) for q, r in cells))


def canonicalize(sigma) -> Configuration:
    return Configuration(canonical_key(sigma))


# ---------------------------------------------------------------- perimeter


@dataclass
class PerimeterWalk:
    cells: List[Cell]

    @property
    def p(self) -> int:
        return len(self.cells) - 1


def boundary_walk(cells: CellSet, start: Cell, entry: int = 4, stop_dir: Optional[int] = None) -> List[Cell]:
    """Clockwise walk along the outer boundary starting at ``start``.

    ``entry`` is the direction from ``start`` to the (empty) location the walk
    notionally arrives from.  At each particle the next one is the first
    occupied cell clockwise from the previous one.  The walk ends when it is
    back at ``start`` about to repeat its first step.  If ``stop_dir`` is
    given, the walk also ends at ``start`` when the clockwise scan reaches
    that direction before any particle.
    """
    walk = [start]
    c = start
    came = entry
    first_step = None
    limit = 6 * len(cells) + 6
    while True:
        nxt = None
        returning = c == start and len(walk) > 1
        for k in range(1, 7):
            d = (came - k) % 6
            if returning and d == stop_dir:
                break
            x = neighbor(c, d)
            if x in cells:
                nxt, nd = x, d
                break
        if nxt is None:
            break
        if c == start:
            if first_step is None:
                first_step = nxt
            elif nxt == first_step:
                break
        walk.append(nxt)
        c = nxt
        came = (nd + 3) % 6
        if len(walk) > limit:
            raise ConfigurationError("boundary walk did not close")
    return walk


def perimeter(sigma) -> PerimeterWalk:
    cells = cells_of(sigma)
    if not cells:
        raise ConfigurationError("empty configuration")
    if not is_connected(cells):
        raise ConfigurationError("perimeter of a disconnected configuration")
    if has_hole(cells):
        raise ConfigurationError("perimeter of a configuration with a hole")
    s = anchor(cells)
    if len(cells) == 1:
        return PerimeterWalk([s])
    # the cell down-left of the anchor is empty, so the walk may start there
    return PerimeterWalk(boundary_walk(cells, s, entry=4))


def exterior_angles(walk: Sequence[Cell]) -> List[int]:
    """Exterior angle in degrees at each visit of the perimeter walk."""
    if len(walk) < 3:
        return []
    angles = []
    m = len(walk) - 1
    for i in range(m):
        c = walk[i]
        prev = walk[i - 1] if i > 0 else walk[m - 1]
        nxt = walk[i + 1]
        din = direction_between(c, prev)
        dout = direction_between(c, nxt)
        k = (din - dout) % 6 or 6
        angles.append(60 * k)
    return angles


# ---------------------------------------------------------------- metrics


@dataclass(frozen=True)
class Metrics:
    n: int
    edges: int
    triangles: int
    perimeter: int


def metrics(sigma) -> Metrics:
    """Full recomputation of n, e, t and p; p from the boundary walk."""
    cells = cells_of(sigma)
    return Metrics(len(cells), edge_count(cells), triangle_count(cells), perimeter(cells).p)


def check_identities(m: Metrics) -> List[str]:
    """Violations of t = 2n - p - 2, e = 3n - p - 3 and t = e - (n - 1)."""
    bad = []
    if m.triangles != 2 * m.n - m.perimeter - 2:
        bad.append(f"t={m.triangles} but 2n-p-2={2 * m.n - m.perimeter - 2}")
    if m.edges != 3 * m.n - m.perimeter - 3:
        bad.append(f"e={m.edges} but 3n-p-3={3 * m.n - m.perimeter - 3}")
    if m.triangles != m.edges - (m.n - 1):
        bad.append("t != e - (n-1)")
    return bad


def audit(sigma) -> List[str]:
    """Everything that should hold for a valid state; empty list when fine."""
    cells = cells_of(sigma)
    if not is_connected(cells):
        return ["disconnected"]
    if has_hole(cells):
        return ["hole"]
    return check_identities(metrics(cells))


# ---------------------------------------------------------------- snapshots


def format_snapshot(sigma, comment: Optional[str] = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {ln}" for ln in comment.splitlines())
    lines.extend(f"{q} {r}" for q, r in sorted(cells_of(sigma)))
    return "\n".join(lines) + "\n"


def parse_snapshot(text: str, source: str = "<snapshot>") -> Configuration:
    cells = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        parts = s.split()
        if len(parts) != 2:
            raise ConfigurationError(f"{source}:{lineno}: expected 'q r', got {raw!r}")
        try:
            c = (int(parts[0]), int(parts[1]))
        except ValueError:
            raise ConfigurationError(f"{source}:{lineno}: non-integer coordinate in {raw!r}") from None
        if c in seen:
            raise ConfigurationError(f"{source}:{lineno}: duplicate cell {c}")
        seen.add(c)
        cells.append(c)
    if not cells:
        raise ConfigurationError(f"{source}: no cells")
    return Configuration(cells)


def read_snapshot(path) -> Configuration:
    with open(path) as fh:
        return parse_snapshot(fh.read(), str(path))


def write_snapshot(path, sigma, comment: Optional[str] = None) -> None:
    with open(path, "w") as fh:
        fh.write(format_snapshot(sigma, comment))
