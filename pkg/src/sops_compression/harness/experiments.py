"""Experiment drivers behind the CLI.

Randomness: repetition ``k`` of an experiment with root seed ``s`` draws
from ``make_rng(s, k)``; scaling runs use ``make_rng(s, n, k)``.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .. import async_engine
from ..configuration import (
    Configuration,
    audit as audit_state,
    check_identities,
    format_snapshot,
    line,
    metrics,
    parse_snapshot,
    read_snapshot,
)
from ..exactsolver import p_min_formula
from ..fastchain import FastChain
from ..dynamics import Chain
from ..rng import make_rng
from .render import write_svg


@dataclass
class ExperimentSpec:
    mode: str = "chain"  # chain | async
    n: int = 100
    lam: float = 4.0
    steps: int = 1_000_000
    time: Optional[float] = None
    seed: int = 0
    snapshot_every: int = 100_000
    initial: str = "line"
    out: Optional[str] = None
    engine: str = "fast"  # fast | python (chain mode only)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if self.snapshot_every <= 0:
            raise ValueError("snapshot interval must be positive")


def initial_configuration(spec: ExperimentSpec) -> Configuration:
    if spec.initial == "line":
        return line(spec.n)
    sigma = read_snapshot(spec.initial)
    problems = audit_state(sigma)
    if problems:
        raise ValueError(f"{spec.initial}: initial configuration invalid: {', '.join(problems)}")
    return sigma


@dataclass
class RunResult:
    rows: List[tuple] = field(default_factory=list)  # (step, p, t, e)
    violations: List[str] = field(default_factory=list)
    final: Optional[Configuration] = None

    @property
    def ok(self) -> bool:
        return not self.violations


class _Outputs:
    """Streaming CSV plus snapshot and SVG files, flushed at every snapshot."""

    def __init__(self, out: Optional[str]):
        self.out = out
        self.fh = None
        if out:
            os.makedirs(os.path.join(out, "snapshots"), exist_ok=True)
            os.makedirs(os.path.join(out, "svg"), exist_ok=True)
            self.fh = open(os.path.join(out, "metrics.csv"), "w", newline="")
            self.writer = csv.writer(self.fh)
            self.writer.writerow(["step", "perimeter", "triangles", "edges"])
            self.fh.flush()

    def snapshot(self, step: int, sigma, m) -> None:
        if not self.out:
            return
        self.writer.writerow([step, m.perimeter, m.triangles, m.edges])
        name = f"step_{step:012d}"
        text = format_snapshot(sigma, f"step {step} perimeter {m.perimeter}")
        with open(os.path.join(self.out, "snapshots", name + ".txt"), "w") as fh:
            fh.write(text)
        write_svg(os.path.join(self.out, "svg", name + ".svg"), sigma, f"step {step}")
        self.fh.flush()

    def close(self) -> None:
        if self.fh:
            self.fh.close()


def _check_snapshot(sigma, incremental_t: Optional[int], result: RunResult, step: int):
    problems = audit_state(sigma)
    m = None
    if not problems:
        m = metrics(sigma)
        problems = check_identities(m)
        if incremental_t is not None and incremental_t != m.triangles:
            problems.append(f"incremental t={incremental_t} != recomputed {m.triangles}")
        # the snapshot must round-trip through the parser
        if parse_snapshot(format_snapshot(sigma)).occupied != set(sigma):
            problems.append("snapshot does not round-trip")
    for pr in problems:
        result.violations.append(f"step {step}: {pr}")
    return m


def run_chain(spec: ExperimentSpec, rng: Optional[np.random.Generator] = None) -> RunResult:
    sigma = initial_configuration(spec)
    rng = rng if rng is not None else make_rng(spec.seed)
    cls = FastChain if spec.engine == "fast" else Chain
    chain = cls(sigma, spec.lam, rng=rng)
    out = _Outputs(spec.out)
    result = RunResult()
    try:
        step = 0
        m = _check_snapshot(chain.configuration(), chain.triangles, result, 0)
        if m:
            result.rows.append((0, m.perimeter, m.triangles, m.edges))
            out.snapshot(0, chain.configuration(), m)
        while step < spec.steps:
            k = min(spec.snapshot_every, spec.steps - step)
            chain.run(k)
            step += k
            conf = chain.configuration()
            m = _check_snapshot(conf, chain.triangles, result, step)
            if m:
                result.rows.append((step, m.perimeter, m.triangles, m.edges))
                out.snapshot(step, conf, m)
        result.final = chain.configuration()
    finally:
        out.close()
    return result


def run_async(spec: ExperimentSpec, rng: Optional[np.random.Generator] = None) -> RunResult:
    """Async engine; ``steps`` counts activations, ``time`` bounds simulated time."""
    sigma = initial_configuration(spec)
    rng = rng if rng is not None else make_rng(spec.seed)
    world = async_engine.World(sigma, spec.lam, rng=rng)
    trace = async_engine.Trace(initial=[p.tail for p in world.particles])
    out = _Outputs(spec.out)
    result = RunResult()
    try:
        proj = world.projection()
        m = _check_snapshot(proj, None, result, 0)
        if m:
            result.rows.append((0, m.perimeter, m.triangles, m.edges))
            out.snapshot(0, proj, m)
        events = 0
        limit = spec.steps if spec.time is None else None
        while True:
            if limit is not None and events >= limit:
                break
            k = spec.snapshot_every if limit is None else min(spec.snapshot_every, limit - events)
            before = world.events
            world.run(events=k, until=spec.time, trace=trace)
            events += world.events - before
            world.check_flagged_disjoint()
            proj = world.projection()
            m = _check_snapshot(proj, None, result, events)
            if m:
                result.rows.append((events, m.perimeter, m.triangles, m.edges))
                out.snapshot(events, proj, m)
            if world.events - before < k:
                break
        world.settle(trace)
        moves = async_engine.reduce_to_chain_trace(trace)
        rep = async_engine.replay_moves(trace.initial, moves, spec.lam, async_engine.completed_qs(trace))
        if rep.invalid:
            result.violations.append(f"{len(rep.invalid)} replayed moves invalid")
        if rep.rejected:
            result.violations.append(f"{len(rep.rejected)} replayed moves fail acceptance")
        if rep.cells != world.projection():
            result.violations.append("replay does not reproduce the final configuration")
        result.final = Configuration(world.projection())
        if spec.out:
            trace.write_csv(os.path.join(spec.out, "trace.csv"))
    finally:
        out.close()
    return result


# ------------------------------------------------------------------ scaling


def scaling_target(n: int, ratio: float) -> int:
    """Perimeter threshold ratio * 4 sqrt(n), kept at least p_min(n)."""
    return max(p_min_formula(n), int(math.floor(ratio * 4.0 * math.sqrt(n))))


@dataclass
class ScalingRow:
    n: int
    target: int
    steps: List[Optional[int]]

    @property
    def censored(self) -> int:
        return sum(1 for s in self.steps if s is None)

    def median(self, budget: int) -> float:
        vals = [budget * 10.0 if s is None else float(s) for s in self.steps]
        med = float(np.median(vals))
        return math.inf if med > budget else med


@dataclass
class ScalingReport:
    lam: float
    ratio: float
    budget: int
    rows: List[ScalingRow]
    slope: float
    slope_low: float
    slope_high: float

    def table(self) -> List[Dict[str, object]]:
        out = []
        prev = None
        for row in self.rows:
            med = row.median(self.budget)
            ratio = med / prev if prev and math.isfinite(med) and math.isfinite(prev) else None
            out.append(
                {
                    "n": row.n,
                    "target_perimeter": row.target,
                    "seeds": len(row.steps),
                    "censored": row.censored,
                    "median_steps": med,
                    "doubling_ratio": ratio,
                }
            )
            prev = med
        return out


def _slope(ns: Sequence[int], meds: Sequence[float]) -> float:
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(meds, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def run_scaling(ns: Sequence[int], lam: float, seeds: int, ratio: float, budget: int,
                root_seed: int = 0, bootstrap: int = 2000) -> ScalingReport:
    rows = []
    for n in ns:
        target = scaling_target(n, ratio)
        steps = []
        for k in range(seeds):
            chain = FastChain(line(n), lam, rng=make_rng(root_seed, n, k))
            used = chain.run(budget, stop_perimeter=target)
            steps.append(used if chain.perimeter <= target else None)
        rows.append(ScalingRow(n, target, steps))
    meds = [r.median(budget) for r in rows]
    slope = lo = hi = math.nan
    if all(math.isfinite(m) for m in meds) and len(rows) >= 2:
        slope = _slope(ns, meds)
        rng = make_rng(root_seed, 10 ** 6)
        boots = []
        for _ in range(bootstrap):
            bm = []
            for r in rows:
                sample = rng.choice(np.array([budget * 10.0 if s is None else s for s in r.steps], dtype=float),
                                    size=len(r.steps), replace=True)
                bm.append(float(np.median(sample)))
            boots.append(_slope(ns, bm))
        lo, hi = (float(v) for v in np.percentile(boots, [2.5, 97.5]))
    return ScalingReport(lam, ratio, budget, rows, slope, lo, hi)
