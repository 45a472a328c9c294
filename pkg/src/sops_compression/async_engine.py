"""Discrete-event emulation of the asynchronous local algorithm.

Each particle carries a Poisson clock of rate 1.  When a contracted particle
activates it picks a direction and a number ``q``; it expands into the
chosen cell if that cell is empty and none of its neighbors is expanded, and
sets its flag if no expanded particle touches the pair of cells it now
occupies.  At its next activation an expanded particle contracts: onto the
new cell if its flag is set and the move would be valid and accepted in the
sequential chain, back onto the old cell otherwise.

While deciding, a particle sees only the cells adjacent to its own
footprint, through :class:`LocalView`.  Heads of other expanded particles
are ignored, since those particles can only retreat to their tails.
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .configuration import cells_of
from .dynamics import Move, delta_triangles, is_valid_move
from .fastchain import move_tables
from .lattice import Cell, extended_neighborhood, neighbor, neighbors
from .rng import make_rng

EMPTY, CONTRACTED, TAIL, HEAD = range(4)

EXPAND = "expand"
CONTRACT_HEAD = "contract_head"
CONTRACT_TAIL = "contract_tail"
NOOP = "noop"


class ConcurrencyViolation(AssertionError):
    pass


@dataclass
class ParticleState:
    id: int
    tail: Cell
    head: Optional[Cell] = None
    flag: bool = False
    next_activation: float = 0.0
    q: float = 0.0
    direction: int = -1

    @property
    def expanded(self) -> bool:
        return self.head is not None

    def footprint(self) -> Tuple[Cell, ...]:
        return (self.tail,) if self.head is None else (self.tail, self.head)


@dataclass(frozen=True)
class ActionRecord:
    time: float
    particle: int
    action: str
    q: Optional[float] = None
    dir: Optional[int] = None
    flag: Optional[bool] = None


@dataclass
class Trace:
    initial: List[Cell]  # position of particle i at time 0
    records: List[ActionRecord] = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            write_trace_rows(fh, self.records)


def write_trace_rows(fh, records: Sequence[ActionRecord], with_time: bool = True) -> None:
    w = csv.writer(fh)
    cols = ["time", "particle", "action", "q", "dir", "flag"]
    w.writerow(cols if with_time else cols[1:])
    for r in records:
        row = [
            r.particle,
            r.action,
            "" if r.q is None else repr(r.q),
            "" if r.dir is None else r.dir,
            "" if r.flag is None else int(r.flag),
        ]
        w.writerow(([repr(r.time)] if with_time else []) + row)


def read_trace_csv(path) -> List[ActionRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                ActionRecord(
                    time=float(row["time"]) if row.get("time") else 0.0,
                    particle=int(row["particle"]),
                    action=row["action"],
                    q=float(row["q"]) if row["q"] else None,
                    dir=int(row["dir"]) if row["dir"] else None,
                    flag=bool(int(row["flag"])) if row["flag"] else None,
                )
            )
    return out


def _allowed_offsets():
    base = set(neighbors((0, 0)))
    table = {None: frozenset(base)}
    for d in range(6):
        head = neighbor((0, 0), d)
        table[d] = frozenset(base | set(neighbors(head)))
    return table


# cells a particle may read, relative to its tail, keyed by head direction
_ALLOWED = _allowed_offsets()


class LocalView:
    """Read access for one particle, limited to cells adjacent to its footprint."""

    __slots__ = ("_world", "_tail", "_allowed")

    def __init__(self, world: "World", p: ParticleState, audit: bool = True):
        self._world = world
        self._tail = p.tail
        if audit:
            self._allowed = _ALLOWED[None if p.head is None else p.direction]
        else:
            self._allowed = None

    def kind(self, c: Cell) -> int:
        if self._allowed is not None and (c[0] - self._tail[0], c[1] - self._tail[1]) not in self._allowed:
            raise ConcurrencyViolation(f"particle logic read non-adjacent cell {c}")
        pid = self._world.occ.get(c)
        if pid is None:
            return EMPTY
        other = self._world.particles[pid]
        if other.head is None:
            return CONTRACTED
        return HEAD if other.head == c else TAIL


class AsyncDraws:
    """Chunked random numbers for the engine: clocks, directions and q."""

    def __init__(self, rng: np.random.Generator, chunk: int = 1 << 14):
        self.rng = rng
        self.chunk = chunk
        self.exps = self.rng.standard_exponential(chunk).tolist()
        self.dirs = self.rng.integers(0, 6, size=chunk).tolist()
        self.qs = self.rng.random(chunk).tolist()
        self.ie = self.id = self.iq = 0

    def exp(self) -> float:
        if self.ie == self.chunk:
            self.exps = self.rng.standard_exponential(self.chunk).tolist()
            self.ie = 0
        v = self.exps[self.ie]
        self.ie += 1
        return v

    def direction(self) -> int:
        if self.id == self.chunk:
            self.dirs = self.rng.integers(0, 6, size=self.chunk).tolist()
            self.id = 0
        v = self.dirs[self.id]
        self.id += 1
        return v

    def q(self) -> float:
        if self.iq == self.chunk:
            self.qs = self.rng.random(self.chunk).tolist()
            self.iq = 0
        v = self.qs[self.iq]
        self.iq += 1
        return v


def schedule(p: ParticleState, now: float, draws) -> float:
    """Set and return the next activation time now + Exp(1)."""
    if isinstance(draws, np.random.Generator):
        gap = float(draws.standard_exponential())
    else:
        gap = draws.exp()
    p.next_activation = now + gap
    return p.next_activation


def _check_pair(a: ParticleState, b: ParticleState) -> None:
    near = set(a.footprint())
    for x in a.footprint():
        near.update(neighbors(x))
    for y in b.footprint():
        if y in near:
            raise ConcurrencyViolation(
                f"flagged particles {a.id} and {b.id} have overlapping neighborhoods"
            )


class World:
    def __init__(self, sigma, lam: float, seed: int = 0, rng: Optional[np.random.Generator] = None,
                 audit: bool = True):
        if not lam > 0:
            raise ValueError("lambda must be positive")
        positions = sorted(cells_of(sigma))
        self.lam = float(lam)
        self.lam_pow = [self.lam ** (k - 6) for k in range(13)]
        self.particles = [ParticleState(i, c) for i, c in enumerate(positions)]
        self.occ: Dict[Cell, int] = {c: i for i, c in enumerate(positions)}
        self.draws = AsyncDraws(rng if rng is not None else make_rng(seed))
        self.audit = audit
        self.time = 0.0
        self.events = 0
        self.flagged: set = set()
        valid, dt = move_tables()
        self._valid = valid.tolist()
        self._dt = dt.tolist()
        self.queue: List[Tuple[float, int]] = []
        for p in self.particles:
            heapq.heappush(self.queue, (schedule(p, 0.0, self.draws), p.id))

    # -- monitor-level views

    def projection(self) -> set:
        """Cells of contracted particles and tails of expanded ones."""
        return {p.tail for p in self.particles}

    def expanded_count(self) -> int:
        return sum(1 for p in self.particles if p.head is not None)

    def check_flagged_disjoint(self) -> None:
        """No flagged expanded particle's footprint touches another's neighborhood."""
        flagged = [self.particles[i] for i in sorted(self.flagged)]
        for i in range(len(flagged)):
            for j in range(i + 1, len(flagged)):
                _check_pair(flagged[i], flagged[j])

    # -- particle logic

    def activate(self, p: ParticleState) -> ActionRecord:
        view = LocalView(self, p, self.audit)
        if p.head is None:
            return self._activate_contracted(p, view)
        return self._activate_expanded(p, view)

    def _activate_contracted(self, p: ParticleState, view: LocalView) -> ActionRecord:
        d = self.draws.direction()
        q = self.draws.q()
        ell = p.tail
        dst = neighbor(ell, d)
        if view.kind(dst) != EMPTY:
            return ActionRecord(self.time, p.id, NOOP, q, d, None)
        for x in neighbors(ell):
            if view.kind(x) >= TAIL:
                return ActionRecord(self.time, p.id, NOOP, q, d, None)
        p.head = dst
        p.direction = d
        p.q = q
        self.occ[dst] = p.id
        view = LocalView(self, p, self.audit)
        flag = True
        for x in extended_neighborhood(ell, dst):
            if view.kind(x) >= TAIL:
                flag = False
                break
        p.flag = flag
        if flag:
            if self.audit:
                for j in self.flagged:
                    _check_pair(p, self.particles[j])
            self.flagged.add(p.id)
        return ActionRecord(self.time, p.id, EXPAND, q, d, flag)

    def _activate_expanded(self, p: ParticleState, view: LocalView) -> ActionRecord:
        d = p.direction
        to_head = False
        if p.flag:
            mask = 0
            bit = 1
            for x in extended_neighborhood(p.tail, p.head):
                k = view.kind(x)
                if k == CONTRACTED or k == TAIL:
                    mask |= bit
                bit <<= 1
            if self._valid[d][mask] and p.q < self.lam_pow[self._dt[d][mask] + 6]:
                to_head = True
        if to_head:
            del self.occ[p.tail]
            p.tail = p.head
            action = CONTRACT_HEAD
        else:
            del self.occ[p.head]
            action = CONTRACT_TAIL
        rec = ActionRecord(self.time, p.id, action, p.q, d, p.flag)
        p.head = None
        self.flagged.discard(p.id)
        p.flag = False
        return rec

    # -- driver

    def run(self, events: Optional[int] = None, until: Optional[float] = None,
            trace: Optional[Trace] = None) -> Trace:
        """Process events in time order until either horizon is reached."""
        if trace is None:
            trace = Trace(initial=[p.tail for p in self.particles])
        records = trace.records
        queue = self.queue
        parts = self.particles
        draws = self.draws
        done = 0
        while queue:
            if events is not None and done >= events:
                break
            t, pid = queue[0]
            if until is not None and t > until:
                break
            heapq.heappop(queue)
            self.time = t
            p = parts[pid]
            records.append(self.activate(p))
            heapq.heappush(queue, (schedule(p, t, draws), pid))
            done += 1
        self.events += done
        return trace

    def settle(self, trace: Trace) -> None:
        """Activate the expanded particles, in id order, until all are contracted."""
        for p in self.particles:
            if p.head is not None:
                trace.records.append(self._activate_expanded(p, LocalView(self, p, self.audit)))


def run(sigma, lam: float, events: Optional[int] = None, until: Optional[float] = None,
        seed: int = 0, rng: Optional[np.random.Generator] = None, audit: bool = True) -> Tuple[World, Trace]:
    world = World(sigma, lam, seed=seed, rng=rng, audit=audit)
    trace = world.run(events=events, until=until)
    return world, trace


def reduce_to_chain_trace(trace: Trace) -> List[Move]:
    """Completed relocations, in order, reconstructed from ids and directions."""
    pos = list(trace.initial)
    moves = []
    for r in trace.records:
        if r.action == CONTRACT_HEAD:
            src = pos[r.particle]
            dst = neighbor(src, r.dir)
            pos[r.particle] = dst
            moves.append(Move(src, dst))
    return moves


@dataclass
class ReplayResult:
    cells: set
    invalid: List[int]
    rejected: List[int]


def replay_moves(initial: Sequence[Cell], moves: Sequence[Move], lam: Optional[float] = None,
                 qs: Optional[Sequence[float]] = None) -> ReplayResult:
    """Apply moves in order with the sequential validity test.

    With ``lam`` and the recorded ``qs`` each move's acceptance is re-checked too.
    """
    cells = set(initial)
    invalid, rejected = [], []
    for i, m in enumerate(moves):
        if not is_valid_move(cells, m.src, m.dst):
            invalid.append(i)
        elif lam is not None and qs is not None:
            if not qs[i] < lam ** delta_triangles(cells, m.src, m.dst):
                rejected.append(i)
        cells.discard(m.src)
        cells.add(m.dst)
    return ReplayResult(cells, invalid, rejected)


def completed_qs(trace: Trace) -> List[float]:
    return [r.q for r in trace.records if r.action == CONTRACT_HEAD]
