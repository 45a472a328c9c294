"""Exhaustive analysis of small systems.

Enumerates every connected hole-free configuration of ``n`` particles up to
translation, builds the chain's transition matrix, and checks the stationary
law, ergodicity, tail probabilities and the counting bounds on the partition
function.
"""

from __future__ import annotations

import builtins
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .configuration import canonical_key, edge_count, has_hole, is_connected, perimeter, triangle_count
from .dynamics import delta_triangles, is_valid_move
from .lattice import Cell, anchor_key, distance, neighbor, neighbors

Key = Tuple[Cell, ...]

MAX_ENUMERATION_N = 10
MAX_DENSE_STATES = 5000  # 5000^2 doubles = 200 MB

# Fixed hole-free polyhexes with 50 cells, used by the 2.17 bound.
N50 = 2430068453031180290203185942420933

MU_HEX = math.sqrt(2.0 + math.sqrt(2.0))


class EnumerationLimitError(RuntimeError):
    pass


def _check_limit(n: int) -> None:
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > MAX_ENUMERATION_N:
        raise EnumerationLimitError(
            f"enumeration of n={n} exceeds the resource limit n<={MAX_ENUMERATION_N}"
        )


# ------------------------------------------------------------- enumeration


def enumerate_connected(n: int) -> List[set]:
    """All connected sets of ``n`` cells up to translation, by anchored growth.

    Level k+1 is obtained by adding each frontier cell to each level-k set and
    deduplicating canonical forms.  Every connected set arises this way since
    deleting a leaf of a spanning tree keeps it connected.
    """
    _check_limit(n)
    level = {((0, 0),)}
    for _ in range(n - 1):
        nxt = set()
        for key in level:
            cells = set(key)
            frontier = {x for c in key for x in neighbors(c) if x not in cells}
            for x in frontier:
                cells.add(x)
                nxt.add(canonical_key(cells))
                cells.remove(x)
        level = nxt
    return [set(k) for k in level]


def enumerate_keys(n: int) -> List[Key]:
    """Sorted canonical keys of the connected hole-free configurations of size n."""
    return sorted(tuple(sorted(s)) for s in enumerate_connected(n) if not has_hole(s))


def _half_plane(c: Cell) -> bool:
    # cells that can share a configuration whose anchor is the origin
    return anchor_key(c) > (0, 0)


def enumerate_redelmeier(n: int) -> List[Key]:
    """Independent enumeration by Redelmeier's untried-set recursion.

    Each configuration is generated exactly once, with its anchor at the
    origin, so no deduplication is needed; holed ones are filtered after.
    """
    _check_limit(n)
    out: List[Key] = []
    origin = (0, 0)

    def rec(current: List[Cell], untried: List[Cell], seen: set) -> None:
        untried = list(untried)
        while untried:
            c = untried.pop()
            current.append(c)
            if len(current) == n:
                if not has_hole(set(current)):
                    out.append(tuple(sorted(current)))
            else:
                added = []
                for x in neighbors(c):
                    if x not in seen and _half_plane(x):
                        seen.add(x)
                        added.append(x)
                rec(current, untried + added, seen)
                for x in added:
                    seen.discard(x)
            current.pop()

    if n == 1:
        return [(origin,)]
    seen = {origin}
    start = []
    for x in neighbors(origin):
        if _half_plane(x):
            seen.add(x)
            start.append(x)
    rec([origin], start, seen)
    return sorted(out)


def enumerate_brute_force(n: int) -> List[Key]:
    """Every (n-1)-subset of the window around the origin, filtered directly.

    Practical up to n = 6; used as a ground-truth oracle.
    """
    if n > 6:
        raise EnumerationLimitError("brute-force window enumeration is limited to n <= 6")
    window = [
        (q, r)
        for q in range(-n, n + 1)
        for r in range(-n, n + 1)
        if 0 < distance((0, 0), (q, r)) <= n - 1 and _half_plane((q, r))
    ]
    out = []
    for combo in combinations(window, n - 1):
        cells = {(0, 0), *combo}
        if is_connected(cells) and not has_hole(cells):
            out.append(tuple(sorted(cells)))
    return sorted(out)


# ------------------------------------------------------------- state space


@dataclass
class StateSpace:
    n: int
    states: List[Key]
    index: Dict[Key, int]
    perimeters: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    m_k: Dict[int, int]
    _transitions: List[Tuple[int, int, int]] = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def p_min(self) -> int:
        return int(self.perimeters.min())

    @property
    def p_max(self) -> int:
        return 2 * self.n - 2

    def transitions(self) -> List[Tuple[int, int, int]]:
        """Every valid move as ``(i, j, dt)``; independent of lambda."""
        if self._transitions is None:
            out = []
            for i, key in builtins.enumerate(self.states):
                cells = set(key)
                for src in key:
                    for d in range(6):
                        dst = neighbor(src, d)
                        if dst in cells or not is_valid_move(cells, src, dst):
                            continue
                        dt = delta_triangles(cells, src, dst)
                        cells.remove(src)
                        cells.add(dst)
                        j = self.index[canonical_key(cells)]
                        cells.remove(dst)
                        cells.add(src)
                        out.append((i, j, dt))
            self._transitions = out
        return self._transitions


_SPACES: Dict[int, StateSpace] = {}


def enumerate_states(n: int) -> StateSpace:
    """State space of all connected hole-free n-particle configurations."""
    if n in _SPACES:
        return _SPACES[n]
    states = enumerate_keys(n)
    index = {k: i for i, k in builtins.enumerate(states)}
    per = np.array([perimeter(set(k)).p for k in states], dtype=np.int64)
    tri = np.array([triangle_count(set(k)) for k in states], dtype=np.int64)
    edg = np.array([edge_count(set(k)) for k in states], dtype=np.int64)
    space = StateSpace(n, states, index, per, tri, edg, dict(sorted(Counter(per.tolist()).items())))
    _SPACES[n] = space
    return space


# ------------------------------------------------------------- the chain


# the operation name; shadows the builtin only for callers of this module
enumerate = enumerate_states


def _off_diagonal(space: StateSpace, lam: float):
    """Positive off-diagonal entries as arrays ``(rows, cols, values)``, duplicates summed."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    size = len(space)
    tr = space.transitions()
    if not tr:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0)
    arr = np.array(tr, dtype=np.int64)
    keep = arr[:, 0] != arr[:, 1]
    arr = arr[keep]
    vals = (1.0 / (6 * space.n)) * np.minimum(1.0, np.power(float(lam), arr[:, 2].astype(float)))
    flat = arr[:, 0] * size + arr[:, 1]
    keys, inv = np.unique(flat, return_inverse=True)
    summed = np.zeros(len(keys))
    np.add.at(summed, inv, vals)
    return keys // size, keys % size, summed


def build_matrix(space: StateSpace, lam: float) -> np.ndarray:
    """Dense transition matrix; refused above ``MAX_DENSE_STATES`` states."""
    size = len(space)
    if size > MAX_DENSE_STATES:
        raise EnumerationLimitError(
            f"dense matrix of {size} states exceeds the limit of {MAX_DENSE_STATES}"
        )
    rows, cols, vals = _off_diagonal(space, lam)
    P = np.zeros((size, size))
    P[rows, cols] = vals
    P[np.diag_indices(size)] = 1.0 - P.sum(axis=1)
    return P


def weights(space: StateSpace, lam: float, form: str = "perimeter") -> np.ndarray:
    """Normalized stationary weights in one of the three equivalent forms."""
    if form == "perimeter":
        w = np.power(float(lam), -space.perimeters.astype(float))
    elif form == "triangles":
        w = np.power(float(lam), space.triangles.astype(float))
    elif form == "edges":
        w = np.power(float(lam), space.edges.astype(float))
    else:
        raise ValueError(f"unknown weight form {form!r}")
    return w / w.sum()


def stationary(space: StateSpace, lam: float) -> np.ndarray:
    return weights(space, lam, "perimeter")


def partition_function(space: StateSpace, lam: float) -> float:
    return float(np.power(float(lam), -space.perimeters.astype(float)).sum())


def solve_stationary(P: np.ndarray) -> np.ndarray:
    """Stationary vector of ``P`` by a direct linear solve."""
    size = P.shape[0]
    A = P.T - np.eye(size)
    A[-1, :] = 1.0
    b = np.zeros(size)
    b[-1] = 1.0
    return np.linalg.solve(A, b)


@dataclass(frozen=True)
class StationarityCheck:
    stationarity: float
    detailed_balance: float
    row_sum: float


def verify_stationary(space: StateSpace, lam: float) -> StationarityCheck:
    """Residuals of pi P = pi, detailed balance and row sums, from the sparse kernel."""
    size = len(space)
    rows, cols, vals = _off_diagonal(space, lam)
    pi = stationary(space, lam)
    out = np.zeros(size)
    np.add.at(out, rows, vals)
    diag = 1.0 - out
    row_sum = np.abs(diag + out - 1.0)
    piP = pi * diag
    np.add.at(piP, cols, pi[rows] * vals)
    # reverse entry of every off-diagonal (i, j); zero when (j, i) is missing
    size64 = np.int64(size)
    fwd = rows * size64 + cols  # sorted, from np.unique
    rev = cols * size64 + rows
    back = np.zeros(len(vals))
    if len(fwd):
        pos = np.minimum(np.searchsorted(fwd, rev), len(fwd) - 1)
        hit = fwd[pos] == rev
        back[hit] = vals[pos[hit]]
    db = np.abs(pi[rows] * vals - pi[cols] * back)
    return StationarityCheck(
        stationarity=float(np.abs(piP - pi).max()),
        detailed_balance=float(db.max()) if len(db) else 0.0,
        row_sum=float(row_sum.max()),
    )


def _reach(adj: List[List[int]], start: int) -> int:
    seen = [False] * len(adj)
    seen[start] = True
    todo = deque([start])
    count = 1
    while todo:
        i = todo.popleft()
        for j in adj[i]:
            if not seen[j]:
                seen[j] = True
                count += 1
                todo.append(j)
    return count


def verify_irreducible(space: StateSpace, lam: float = 1.0) -> bool:
    """Strong connectivity of the positive-probability transition digraph."""
    size = len(space)
    rows, cols, _ = _off_diagonal(space, lam)
    fwd = [[] for _ in range(size)]
    bwd = [[] for _ in range(size)]
    for i, j in zip(rows.tolist(), cols.tolist()):
        fwd[i].append(j)
        bwd[j].append(i)
    return _reach(fwd, 0) == size and _reach(bwd, 0) == size


def support_symmetric(space: StateSpace, lam: float = 1.0) -> bool:
    size = np.int64(len(space))
    rows, cols, _ = _off_diagonal(space, lam)
    fwd = rows * size + cols
    return bool(np.isin(cols * size + rows, fwd).all())


def tail_probability(space: StateSpace, lam: float, mode: str, param: float) -> float:
    """pi-mass of {p >= alpha * p_min} ("compression") or {p <= beta * p_max} ("expansion")."""
    pi = stationary(space, lam)
    p = space.perimeters
    if mode == "compression":
        event = p >= param * space.p_min
    elif mode == "expansion":
        event = p <= param * space.p_max
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return float(pi[event].sum())


# ------------------------------------------------------------- bounds


def p_min_formula(n: int) -> int:
    """Minimum perimeter of n particles: ceil(sqrt(12n - 3)) - 3."""
    if n == 1:
        return 0
    return math.isqrt(12 * n - 4) + 1 - 3


def bound_sqrt2(n: int, lam: float) -> float:
    return (math.sqrt(2.0) / lam) ** (2 * n - 2)


def bound_167(n: int, lam: float) -> float:
    return 0.12 * (1.67 / lam) ** (2 * n - 2)


def bound_217(n: int, lam: float) -> float:
    return 0.13 * (2.17 / lam) ** (2 * n - 2)


def n50_growth() -> float:
    """(2 N50)^(1/100), the base behind the 2.17 bound."""
    return math.exp((math.log(2) + math.log(N50)) / 100)


def lambda_star(alpha: float) -> float:
    """Compression threshold (2 + sqrt 2)^(alpha / (alpha - 1))."""
    return (2.0 + math.sqrt(2.0)) ** (alpha / (alpha - 1.0))


def zigzag_paths(n: int) -> List[Key]:
    """Paths whose every step goes east or northeast: 2^(n-1) configurations."""
    out = []
    for bits in range(1 << (n - 1)):
        c = (0, 0)
        cells = [c]
        for k in range(n - 1):
            c = neighbor(c, (bits >> k) & 1)
            cells.append(c)
        out.append(canonical_key(cells))
    return out


def _left_low(cells):  # leftmost column, then lowest
    return min(cells, key=lambda c: (c[0] + c[1], c[1] - c[0]))


def _left_high(cells):  # leftmost column, then highest
    return min(cells, key=lambda c: (c[0] + c[1], c[0] - c[1]))


def _right_high(cells):  # rightmost column, then highest
    return max(cells, key=lambda c: (c[0] + c[1], c[1] - c[0]))


def _right_low(cells):  # rightmost column, then lowest
    return max(cells, key=lambda c: (c[0] + c[1], c[0] - c[1]))


def attachment_configurations(n: int) -> List[Key]:
    """Configurations built by the 22-way block attachment.

    Start from one particle; repeatedly attach one of the 11 three-particle
    configurations in one of two ways.  Way A puts the block's highest
    leftmost particle directly below-right (east) of the structure's lowest
    rightmost particle.  Way B puts the block's lowest leftmost particle
    directly above-right (northeast) of the structure's highest rightmost
    particle.  Gives 22^((n-1)//3) distinct configurations on the first
    1 + 3*((n-1)//3) particles, padded with a straight tail to reach n.
    """
    blocks = enumerate_keys(3)
    rounds = (n - 1) // 3
    structures = [((0, 0),)]
    for _ in range(rounds):
        nxt = []
        for s in structures:
            cells = set(s)
            for b in blocks:
                for way in (0, 1):
                    if way == 0:
                        target = neighbor(_right_low(cells), 0)
                        ref = _left_high(b)
                    else:
                        target = neighbor(_right_high(cells), 1)
                        ref = _left_low(b)
                    dq, dr = target[0] - ref[0], target[1] - ref[1]
                    placed = {(q + dq, r + dr) for q, r in b}
                    nxt.append(tuple(sorted(cells | placed)))
        structures = nxt
    out = []
    for s in structures:
        cells = set(s)
        tip = _right_low(cells)
        for _ in range(n - len(cells)):
            tip = neighbor(tip, 0)
            cells.add(tip)
        out.append(canonical_key(cells))
    return out


# ------------------------------------------------------------- dual polygons


def _vertex_cells(v) -> Tuple[Cell, Cell, Cell]:
    kind, q, r = v
    if kind == 0:  # up face
        return ((q, r), (q + 1, r), (q, r + 1))
    return ((q, r), (q + 1, r), (q + 1, r - 1))


def hex_vertex_neighbors(v) -> List[Tuple[int, int, int]]:
    """Neighbors in the hexagonal lattice whose vertices are lattice faces."""
    kind, q, r = v
    if kind == 0:
        return [(1, q, r), (1, q - 1, r + 1), (1, q, r + 1)]
    return [(0, q, r), (0, q + 1, r - 1), (0, q, r - 1)]


def _face_of(a: Cell, b: Cell, c: Cell):
    """Honeycomb vertex for the face with corners a, b, c."""
    tri = sorted((a, b, c))
    for kind in (0, 1):
        base = tri[0]
        for cand in ((kind, base[0], base[1]), (kind, base[0] - 1, base[1]), (kind, base[0], base[1] - 1),
                     (kind, base[0] - 1, base[1] + 1)):
            if sorted(_vertex_cells(cand)) == tri:
                return cand
    raise ValueError(f"{a}, {b}, {c} do not form a face")


def dual_boundary(cells) -> List[Tuple]:
    """Boundary edges of the union of hexagons around the occupied cells.

    Each lattice edge from an occupied cell to an empty one is crossed by one
    honeycomb edge, joining the two faces on either side of it.
    """
    cells = set(cells)
    edges = []
    for c in cells:
        for d in range(6):
            x = neighbor(c, d)
            if x in cells:
                continue
            u = _face_of(c, x, neighbor(c, d + 1))
            w = _face_of(c, x, neighbor(c, d - 1))
            edges.append((u, w))
    return edges


def is_simple_cycle(edges: Sequence[Tuple]) -> bool:
    adj: Dict = {}
    for u, w in edges:
        adj.setdefault(u, []).append(w)
        adj.setdefault(w, []).append(u)
    if any(len(v) != 2 for v in adj.values()):
        return False
    if len(adj) != len(edges):
        return False
    start = next(iter(adj))
    prev, cur, steps = None, start, 0
    while True:
        a, b = adj[cur]
        nxt = a if a != prev else b
        prev, cur = cur, nxt
        steps += 1
        if cur == start:
            break
    return steps == len(edges)


_SAP_CACHE: Dict[int, int] = {}


def self_avoiding_polygons(length: int) -> int:
    """Number of self-avoiding polygons of the given length on the honeycomb lattice.

    A polygon of length L has L/2 vertices of each of the two kinds and two
    orientations, so the L translates rooting it at a fixed vertex of one
    kind give L closed self-avoiding walks.  The count is c / L, where c is
    the number of self-avoiding walks of L - 1 steps from that vertex ending
    next to it.
    """
    if length in _SAP_CACHE:
        return _SAP_CACHE[length]
    if length < 6 or length % 2:
        _SAP_CACHE[length] = 0
        return 0
    from ._sap import count_returning_walks

    c = count_returning_walks(length)
    if c % length:
        raise ArithmeticError("closed-walk count not divisible by the length")
    _SAP_CACHE[length] = c // length
    return c // length


@dataclass
class SawReport:
    n_max: int
    dual_ok: bool
    violations: List[str]
    rows: List[Tuple[int, int, int]]  # (k, m_k summed over n, SAP(2k+6))

    @property
    def ok(self) -> bool:
        return self.dual_ok and not self.violations


def saw_bound_check(n_max: int = 6) -> SawReport:
    """Dual polygon check and m_k <= SAP(2k+6) over all states with n <= n_max."""
    violations = []
    totals: Counter = Counter()
    per_n = []
    for n in range(2, n_max + 1):
        space = enumerate_states(n)
        for key, p in zip(space.states, space.perimeters.tolist()):
            edges = dual_boundary(key)
            if len(edges) != 2 * p + 6:
                violations.append(f"n={n} {key}: dual length {len(edges)} != {2 * p + 6}")
            elif not is_simple_cycle(edges):
                violations.append(f"n={n} {key}: dual boundary is not a simple cycle")
        per_n.append(space.m_k)
        totals.update(space.m_k)
    dual_ok = not violations
    rows = []
    for k in sorted(totals):
        sap = self_avoiding_polygons(2 * k + 6)
        rows.append((k, totals[k], sap))
        for n, mk in builtins.enumerate(per_n, start=2):
            if mk.get(k, 0) > sap:
                violations.append(f"n={n}: m_{k}={mk[k]} exceeds SAP({2 * k + 6})={sap}")
        if totals[k] > sap:
            violations.append(f"sum over n of m_{k}={totals[k]} exceeds SAP({2 * k + 6})={sap}")
    return SawReport(n_max, dual_ok, violations, rows)


@dataclass
class BoundReport:
    lam: float
    n: int
    Z_exact: float
    Z_lb_sqrt2: float
    Z_lb_167: float
    Z_lb_217: float
    saw_counts: Dict[int, int]
    applies_167: bool
    applies_217: bool
    zigzag_count: int
    attachment_count: int

    def checks(self) -> List[Tuple[str, bool, bool]]:
        """(name, applicable, holds) per lower bound."""
        return [
            ("sqrt2", True, self.Z_lb_sqrt2 <= self.Z_exact),
            ("1.67", self.applies_167, self.Z_lb_167 <= self.Z_exact),
            ("2.17", self.applies_217, self.Z_lb_217 <= self.Z_exact),
        ]

    @property
    def ok(self) -> bool:
        return all(holds for _, applies, holds in self.checks() if applies)


def bounds_report(n: int, lam: float, saw_lengths: Sequence[int] = ()) -> BoundReport:
    space = enumerate_states(n)
    states = set(space.states)
    zig = set(zigzag_paths(n))
    att = set(attachment_configurations(n))
    if not zig <= states or not att <= states:
        raise AssertionError("constructed configurations missing from the enumeration")
    return BoundReport(
        lam=lam,
        n=n,
        Z_exact=partition_function(space, lam),
        Z_lb_sqrt2=bound_sqrt2(n, lam),
        Z_lb_167=bound_167(n, lam),
        Z_lb_217=bound_217(n, lam),
        saw_counts={L: self_avoiding_polygons(L) for L in saw_lengths},
        applies_167=lam >= 1,
        applies_217=lam > 1,
        zigzag_count=len(zig),
        attachment_count=len(att),
    )


def dump_states(space: StateSpace) -> str:
    """One snapshot block per state, separated by blank lines."""
    blocks = []
    for key, p in zip(space.states, space.perimeters.tolist()):
        lines = [f"# perimeter {p}"] + [f"{q} {r}" for q, r in key]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def histogram_csv(space: StateSpace) -> str:
    rows = ["k,m_k"] + [f"{k},{m}" for k, m in space.m_k.items()]
    return "\n".join(rows) + "\n"
