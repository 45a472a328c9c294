"""Constructive ergodicity: move any configuration onto a straight line.

Orientation words (above, left, below-right, ...) refer to the picture in
which lattice columns are vertical: a column is a set of cells with equal
``q + r``, "up" is the northwest direction and "right" means larger column
index.  In direction indices:

    above = 2, above-right = 1, below-right = 0,
    below = 5, below-left = 4, above-left = 3.

The anchor ``S`` is the lowest particle of the leftmost column.  Particles
are eliminated one at a time by walking them counterclockwise around the
rest of the configuration until they extend the line that grows from ``S``
toward the below-left.  Every move is checked with
:func:`dynamics.is_valid_move` before it is applied.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .configuration import (
    canonical_key,
    cells_of,
    has_hole,
    is_connected,
    is_gap_local,
    neighbor_arcs,
)
from .dynamics import is_valid_move, transition_probability
from .lattice import Cell, anchor_key, direction_between, neighbor, neighbors

BELOW_RIGHT, ABOVE_RIGHT, ABOVE, ABOVE_LEFT, BELOW_LEFT, BELOW = range(6)


class NormalizerError(RuntimeError):
    pass


@dataclass
class LoggedMove:
    particle: int
    src: Cell
    dst: Cell

    @property
    def direction(self) -> int:
        return direction_between(self.src, self.dst)


@dataclass
class NormalizerState:
    cells: set
    anchor: Cell
    eliminated: int = 0
    moves: List[LoggedMove] = field(default_factory=list)
    ids: Dict[Cell, int] = field(default_factory=dict)
    rounds: int = 0
    audit: bool = True
    branches: Counter = field(default_factory=Counter)
    # last particle of the gap-free walk prefix; follows that particle's moves
    frontier: Optional[Cell] = None

    @property
    def n(self) -> int:
        return len(self.cells)

    def line_cell(self, k: int) -> Cell:
        """k-th cell of the line below-left of the anchor (k >= 1)."""
        q, r = self.anchor
        return (q, r - k)

    def line_cells(self) -> set:
        return {self.line_cell(k) for k in range(1, self.eliminated + 1)}

    def body(self) -> set:
        return self.cells - self.line_cells()

    def move(self, src: Cell, dst: Cell) -> None:
        if not is_valid_move(self.cells, src, dst):
            raise NormalizerError(f"invalid move {src} -> {dst}")
        self.cells.remove(src)
        self.cells.add(dst)
        pid = self.ids.pop(src)
        self.ids[dst] = pid
        self.moves.append(LoggedMove(pid, src, dst))
        if src == self.frontier:
            self.frontier = dst
        if self.audit:
            if not is_connected(self.cells) or has_hole(self.cells):
                raise NormalizerError(f"move {src} -> {dst} broke connectivity or made a hole")
            if len(self.moves) > 50 * self.n ** 3 + 100:
                raise NormalizerError("move budget exceeded")


def new_state(sigma, audit: bool = True) -> NormalizerState:
    cells = set(cells_of(sigma))
    if not cells:
        raise NormalizerError("empty configuration")
    if not is_connected(cells) or has_hole(cells):
        raise NormalizerError("input must be connected and hole-free")
    s = min(cells, key=anchor_key)
    ids = {c: i for i, c in enumerate(sorted(cells))}
    return NormalizerState(cells=cells, anchor=s, ids=ids, audit=audit)


def _occupied_dirs(cells, c: Cell) -> List[bool]:
    return [x in cells for x in neighbors(c)]


def _first_neighbor(st: NormalizerState) -> Optional[Tuple[int, Cell]]:
    for d in (ABOVE, ABOVE_RIGHT, BELOW_RIGHT):
        x = neighbor(st.anchor, d)
        if x in st.cells:
            return d, x
    return None


# ------------------------------------------------------------------ anchor


def initialize_anchor(st: NormalizerState) -> None:
    """If the anchor's first neighbor is below-right, move the anchor down.

    Afterwards the first neighbor is above-right.  Called once, before any
    particle is eliminated; later moves of the anchor carry the line along
    (see :func:`shift_anchor_down`).
    """
    if st.eliminated:
        raise NormalizerError("the anchor can only move before eliminations start")
    fn = _first_neighbor(st)
    if fn is None or fn[0] != BELOW_RIGHT:
        return
    st.branches["initialize"] += 1
    old = st.anchor
    new = neighbor(old, BELOW)
    st.move(old, new)
    st.anchor = new


def shift_anchor_down(st: NormalizerState) -> None:
    """Move the anchor and the whole line one step down.

    Eliminations can leave the anchor with a single body neighbor, below
    and right of it.  As in :func:`initialize_anchor` the anchor steps down,
    and each line particle follows, top first, so the line keeps its shape.
    """
    old = st.anchor
    new = neighbor(old, BELOW)
    st.move(old, new)
    st.anchor = new
    for k in range(1, st.eliminated + 1):
        st.move((old[0], old[1] - k), (new[0], new[1] - k))
    if st.audit:
        check_line_invariant(st)


def below_left(st: NormalizerState, c: Cell) -> bool:
    """Whether ``c`` is left of the anchor's column or below the anchor in it."""
    s = st.anchor
    col = s[0] + s[1]
    return c[0] + c[1] < col or (c[0] + c[1] == col and c[1] < s[1])


def check_line_invariant(st: NormalizerState) -> None:
    """Below and left of the anchor there is only the straight line."""
    line = st.line_cells()
    for c in st.cells:
        if c not in line and below_left(st, c):
            raise NormalizerError(f"particle {c} sits below-left of the anchor off the line")
    if not line <= st.cells:
        raise NormalizerError("line has a missing particle")


# ------------------------------------------------------------------ walks


def body_walk(st: NormalizerState) -> List[Cell]:
    """Clockwise perimeter walk of the body, from the anchor back to it.

    The walk notionally arrives at the anchor from the cell below-left of it
    and stops when, back at the anchor, the clockwise scan would reach that
    cell again.  Line particles are never entered.
    """
    body = st.body()
    s = st.anchor
    walk = [s]
    if len(body) == 1:
        return walk
    c = s
    came = BELOW_LEFT
    limit = 6 * len(body) + 6
    while True:
        nxt = None
        for k in range(1, 7):
            d = (came - k) % 6
            if c == s and len(walk) > 1 and d == BELOW_LEFT:
                break
            x = neighbor(c, d)
            if x in body:
                nxt, nd = x, d
                break
        if nxt is None:
            return walk
        walk.append(nxt)
        c = nxt
        came = (nd + 3) % 6
        if len(walk) > limit:
            raise NormalizerError("body walk did not close")


def span(walk: Sequence[Cell], i: int, s: Cell) -> List[Cell]:
    """Cells strictly clockwise between the previous and next walk positions."""
    c = walk[i]
    prev = walk[i - 1] if i > 0 else neighbor(s, BELOW_LEFT)
    nxt = walk[i + 1] if i + 1 < len(walk) else neighbor(s, BELOW_LEFT)
    din = direction_between(c, prev)
    dout = direction_between(c, nxt)
    k = (din - dout) % 6 or 6
    return [neighbor(c, din - j) for j in range(1, k)]


def first_gap(st: NormalizerState, walk: Sequence[Cell]) -> Optional[Tuple[int, Cell]]:
    """Earliest walk position whose clockwise span contains a gap."""
    for i in range(len(walk)):
        for x in span(walk, i, st.anchor):
            if x not in st.cells and is_gap_local(st.cells, x):
                return i, x
    return None


# ------------------------------------------------------------------ elimination


def _arc_end_clockwise(cells, c: Cell) -> Optional[int]:
    """Direction of the clockwise end of the single arc of neighbors of ``c``."""
    occ = _occupied_dirs(cells, c)
    ends = [d for d in range(6) if occ[d] and not occ[d - 1]]
    if len(ends) != 1:
        return None
    return ends[0]


def eliminable(cells, v: Cell) -> bool:
    occ = _occupied_dirs(cells, v)
    return 1 <= sum(occ) <= 4 and neighbor_arcs(cells, v) == 1


def eliminate(st: NormalizerState, v: Cell) -> None:
    """Pivot ``v`` counterclockwise around its neighbors until it joins the line."""
    if not eliminable(st.cells, v):
        raise NormalizerError(f"particle {v} cannot be eliminated")
    target = st.line_cell(st.eliminated + 1)
    hops = 0
    while v != target:
        end = _arc_end_clockwise(st.cells, v)
        if end is None:
            raise NormalizerError(f"neighbors of {v} are not a single arc")
        dst = neighbor(v, end - 1)
        st.move(v, dst)
        v = dst
        hops += 1
        if hops > 6 * st.n + 12:
            raise NormalizerError("elimination did not reach the line")
    st.eliminated += 1
    if st.audit:
        check_line_invariant(st)


def resolve_duplicate(st: NormalizerState, walk: Sequence[Cell]) -> None:
    """Eliminate a particle between the two occurrences of the innermost repeat."""
    last: Dict[Cell, int] = {}
    best = None
    for j, c in enumerate(walk):
        if c in last:
            i = last[c]
            if best is None or j - i < best[1] - best[0]:
                best = (i, j)
        last[c] = j
    if best is None:
        raise NormalizerError("walk has no repeated particle")
    i, j = best
    for k in range(i + 1, j):
        if eliminable(st.cells, walk[k]):
            eliminate(st, walk[k])
            return
    raise NormalizerError("no eliminable particle inside the repeat")


def clear_base_gap(st: NormalizerState) -> None:
    """Clear a gap in the anchor's own span.

    With the first neighbor above-right, the gap is the cell directly above
    the anchor and it is blocked by the particle two steps above.  That
    particle moves into the gap and is then eliminated.
    """
    s = st.anchor
    fn = _first_neighbor(st)
    if fn is None or fn[0] != ABOVE_RIGHT:
        return
    gap = neighbor(s, ABOVE)
    if gap in st.cells or not is_gap_local(st.cells, gap):
        return
    q = neighbor(gap, ABOVE)
    if q not in st.cells:
        raise NormalizerError("base gap without a blocking particle")
    st.move(q, gap)
    eliminate(st, gap)


def _left_of_prefix(st: NormalizerState, g: Cell) -> bool:
    """Whether ``g`` lies left of the walk from the anchor to the frontier particle."""
    walk = body_walk(st)
    if st.frontier is None or st.frontier not in walk:
        return True
    j = walk.index(st.frontier)
    return any(g in span(walk, i, st.anchor) for i in range(j + 1))


def _bridge_cell(cells, v: Cell) -> Optional[Cell]:
    """Empty neighbor of ``v`` whose filling joins its two neighbor arcs.

    Exists when the arcs are separated on one side by a single empty cell.
    """
    occ = _occupied_dirs(cells, v)
    for d in range(6):
        if not occ[d] and occ[d - 1] and occ[(d + 1) % 6]:
            trial = list(occ)
            trial[d] = True
            runs = sum(1 for e in range(6) if trial[e] and not trial[e - 1])
            if runs == 1:
                return neighbor(v, d)
    return None


def gap_creation(st: NormalizerState, q: Cell, ell: Cell, depth: int = 0) -> str:
    """Fill ``ell`` or move ``q`` into it, without creating gaps next to the walk.

    ``q`` has disconnected neighbors that would be joined by ``ell``.
    Returns ``"moved"`` if ``q`` itself moved to ``ell`` and ``"filled"`` if
    another particle moved into ``ell`` (after which ``q``'s neighbors are
    connected).
    """
    if depth > 4 * st.n:
        raise NormalizerError("gap creation recursion too deep")
    cells = st.cells
    d_ell = direction_between(q, ell)
    if is_gap_local(cells, ell):
        # Case 1: the particle directly across ell from q blocks it.
        qp = neighbor(ell, d_ell)
        if qp not in cells:
            raise NormalizerError("gap without a particle across it")
        if neighbor_arcs(cells, qp) > 1:
            ell2 = _bridge_cell(cells, qp)
            if ell2 is None:
                raise NormalizerError("blocking particle has no bridging cell")
            st.branches["gc_recurse_across"] += 1
            res = gap_creation(st, qp, ell2, depth + 1)
            if res == "moved" and not is_gap_local(st.cells, ell):
                return _gap_case2(st, q, ell, depth)
        if neighbor_arcs(st.cells, qp) == 1:
            st.branches["gc_fill"] += 1
            st.move(qp, ell)
            return "filled"
        raise NormalizerError("could not clear the gap in front of the particle")
    return _gap_case2(st, q, ell, depth)


def _gap_case2(st: NormalizerState, q: Cell, ell: Cell, depth: int) -> str:
    """``ell`` is not a gap: move ``q`` there and repair a new gap at ell2."""
    cells = st.cells
    d = direction_between(q, ell)
    ell1 = neighbor(ell, d - 1)
    ell2 = neighbor(ell, d)
    ell3 = neighbor(ell, d + 1)
    n1 = neighbor(q, d - 1)
    n2 = neighbor(q, d + 1)
    b = neighbor(ell1, d)
    c = neighbor(ell2, d)
    dd = neighbor(ell3, d)
    gap1_before = ell1 not in cells and is_gap_local(cells, ell1)
    gap2_before = ell2 not in cells and is_gap_local(cells, ell2)
    gap3_before = ell3 not in cells and is_gap_local(cells, ell3)
    st.move(q, ell)
    cells = st.cells
    if ell2 in cells or gap2_before or not is_gap_local(cells, ell2):
        return "moved"
    if not _left_of_prefix(st, ell2):
        # the new gap faces the part of the walk beyond the frontier
        st.branches["gc_gap_off_prefix"] += 1
        return "moved"
    # a new gap at ell2; fix it according to where the blocker sits
    st.branches["gc_new_gap"] += 1
    if b in cells and n1 in cells and ell1 not in cells and not gap1_before and is_valid_move(cells, n1, ell1):
        st.branches["gc_fix_b"] += 1
        st.move(n1, ell1)
        return "moved"
    if dd in cells and n2 in cells and ell3 not in cells and not gap3_before and is_valid_move(cells, n2, ell3):
        st.branches["gc_fix_d"] += 1
        st.move(n2, ell3)
        return "moved"
    if c in cells:
        if neighbor_arcs(cells, c) > 1:
            bridge = _bridge_cell(cells, c)
            if bridge is not None and direction_between(c, bridge) == d:
                st.branches["gc_fix_c_recurse"] += 1
                res = gap_creation(st, c, bridge, depth + 1)
                if res == "moved":
                    return "moved"
        cells = st.cells
        if c in cells and eliminable(cells, c):
            # C already on the walk before Q: eliminate it where it stands
            walk = body_walk(st)
            if c in walk and (ell not in walk or walk.index(c) < walk.index(ell)):
                st.branches["gc_fix_c_eliminate"] += 1
                eliminate(st, c)
                return "moved"
        if c in cells and neighbor_arcs(cells, c) == 1 and is_valid_move(cells, c, ell2):
            st.branches["gc_fix_c_move"] += 1
            st.move(c, ell2)
            if eliminable(st.cells, ell2):
                eliminate(st, ell2)
            return "moved"
    st.branches["gc_new_gap_left"] += 1
    return "moved"


def _across_gap(st: NormalizerState, v: Cell, g: Cell) -> None:
    """Move the particle across gap ``g`` from ``v`` into ``g``, then eliminate it."""
    d = direction_between(v, g)
    q = neighbor(g, d)
    if q not in st.cells:
        raise NormalizerError("gap is not blocked across from the walk")
    if neighbor_arcs(st.cells, q) > 1:
        ell = _bridge_cell(st.cells, q)
        if ell is None:
            raise NormalizerError("blocking particle has no bridging cell")
        res = gap_creation(st, q, ell)
        if res == "moved":
            return
    if not is_gap_local(st.cells, g) or g in st.cells:
        return
    st.move(q, g)
    if eliminable(st.cells, g):
        eliminate(st, g)


def resolve_gap(st: NormalizerState) -> str:
    """One round: eliminate a particle or lengthen the gap-free prefix of the walk.

    Returns a short tag naming the branch taken.
    """
    walk = body_walk(st)
    if len(walk) == 1:
        return "done"
    fn = _first_neighbor(st)
    if st.eliminated and fn is not None and fn[0] == BELOW_RIGHT:
        shift_anchor_down(st)
        return "reanchor"
    hit = first_gap(st, walk)
    if hit is None:
        # no gaps at all: the closed walk has a repeat (the anchor at least)
        resolve_duplicate(st, walk)
        return "duplicate"
    k, g = hit
    st.frontier = walk[k]
    if k == 0:
        clear_base_gap(st)
        if is_gap_local(st.cells, g) and g not in st.cells:
            _across_gap(st, st.anchor, g)
            return "base_across"
        return "base"
    prefix = walk[: k + 1]
    v = walk[k]
    if eliminable(st.cells, v) and v != st.anchor:
        eliminate(st, v)
        return "eliminate"
    if len(set(prefix)) < len(prefix):
        resolve_duplicate(st, prefix)
        return "duplicate"
    occ = _occupied_dirs(st.cells, v)
    count = sum(occ)
    bridge = _bridge_cell(st.cells, v)
    if bridge is not None and below_left(st, bridge):
        raise NormalizerError(f"bridge {bridge} for {v} lies below-left of the anchor")
    if bridge is not None and count in (2, 3):
        gap_creation(st, v, bridge)
        return "gap_creation"
    if count == 2:
        # the two neighbors sit on opposite sides; use the particle across the gap
        _across_gap(st, v, g)
        return "across"
    raise NormalizerError(f"unhandled neighborhood at {v}: {occ}")


def normalize(sigma, audit: bool = True) -> NormalizerState:
    """Transform ``sigma`` into the straight below-left line from its anchor."""
    st = new_state(sigma, audit=audit)
    n = st.n
    if n == 1:
        return st
    budget = 2 * n * n  # rounds must stay strictly below this
    initialize_anchor(st)
    while st.eliminated < n - 1:
        before = (st.eliminated, len(st.moves))
        st.branches[resolve_gap(st)] += 1
        st.rounds += 1
        if (st.eliminated, len(st.moves)) == before:
            raise NormalizerError("round made no progress")
        if st.rounds >= budget:
            raise NormalizerError("round budget exceeded")
    return st


def is_line(cells) -> bool:
    cells = cells_of(cells)
    s = min(cells, key=anchor_key)
    return cells == {(s[0], s[1] + k) for k in range(len(cells))}


def canonical_line(n: int) -> Tuple[Cell, ...]:
    return canonical_key({(0, -k) for k in range(n)})


def replay(sigma, moves: Sequence[LoggedMove]) -> set:
    """Apply logged moves, checking each one."""
    cells = set(cells_of(sigma))
    for m in moves:
        if not is_valid_move(cells, m.src, m.dst):
            raise NormalizerError(f"logged move {m.src} -> {m.dst} is invalid")
        cells.remove(m.src)
        cells.add(m.dst)
    return cells


def check_reverse(sigma, moves: Sequence[LoggedMove], lam: float = 1.0, exact: bool = False) -> bool:
    """Walk the log backwards from the final state; each step must be possible.

    With ``exact`` the full transition probability is evaluated; otherwise
    the cheaper equivalent validity test of the reverse move is used.
    """
    cells = replay(sigma, moves)
    for m in reversed(moves):
        if exact:
            after = set(cells)
            after.remove(m.dst)
            after.add(m.src)
            if not transition_probability(cells, after, lam) > 0:
                return False
            cells = after
        else:
            if not is_valid_move(cells, m.dst, m.src):
                return False
            cells.remove(m.dst)
            cells.add(m.src)
    return canonical_key(cells) == canonical_key(sigma)
