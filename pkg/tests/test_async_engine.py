import io

import numpy as np
import pytest

from sops_compression import async_engine as ae
from sops_compression.configuration import audit, line
from sops_compression.dynamics import Move
from sops_compression.rng import make_rng


class FixedDraws:
    """Scripted directions and q values; clocks are all 1."""

    def __init__(self, dirs, qs):
        self.dirs = list(dirs)
        self.qs = list(qs)

    def exp(self):
        return 1.0

    def direction(self):
        return self.dirs.pop(0)

    def q(self):
        return self.qs.pop(0)


def _scripted(dirs, qs, sigma=None):
    w = ae.World(sigma if sigma is not None else line(3), 4.0, seed=0)
    w.draws = FixedDraws(dirs, qs)
    return w


def test_exponential_clock_mean():
    d = ae.AsyncDraws(make_rng(1))
    xs = np.array([d.exp() for _ in range(1_000_000)])
    assert 0.99 <= xs.mean() <= 1.01
    assert 0.99 <= xs.var() <= 1.02


def test_activation_counts_are_poisson():
    w = ae.World(line(10), 4.0, rng=make_rng(2))
    trace = w.run(until=2000.0)
    counts = np.bincount([r.particle for r in trace.records], minlength=10)
    # rate one per particle: about 2000 each, sd about 45
    assert (np.abs(counts - 2000) < 250).all()


def test_expand_flag_and_contract_to_head():
    w = _scripted([1], [0.0])
    p0 = w.particles[0]
    rec = w.activate(p0)
    assert rec.action == ae.EXPAND and rec.flag is True
    assert p0.head == (0, 1) and w.projection() == {(0, 0), (1, 0), (2, 0)}
    rec = w.activate(p0)
    assert rec.action == ae.CONTRACT_HEAD
    assert p0.tail == (0, 1) and p0.head is None and not w.flagged


def test_no_expansion_next_to_expanded_particle():
    w = _scripted([1, 1], [0.0, 0.0])
    w.activate(w.particles[0])
    rec = w.activate(w.particles[1])  # (1, 0) touches the tail at (0, 0)
    assert rec.action == ae.NOOP and w.particles[1].head is None


def test_unflagged_expansion_retreats():
    w = _scripted([1, 2, 2], [0.0, 0.0, 0.0])
    w.activate(w.particles[0])  # head at (0, 1)
    rec = w.activate(w.particles[2])  # (2, 0) -> (1, 1), next to that head
    assert rec.action == ae.EXPAND and rec.flag is False
    assert w.flagged == {0}
    rec = w.activate(w.particles[2])
    assert rec.action == ae.CONTRACT_TAIL and w.particles[2].tail == (2, 0)


def test_rejected_by_acceptance_retreats():
    # leaving the triangle loses one triangle; q = 0.9 > 1/4 rejects
    tri = {(0, 0), (1, 0), (0, 1)}
    w = _scripted([1], [0.9], sigma=tri)  # (1, 0) -> (1, 1) is valid
    p = w.particles[w.occ[(1, 0)]]
    assert w.activate(p).action == ae.EXPAND
    assert w.activate(p).action == ae.CONTRACT_TAIL


def test_local_view_refuses_far_reads():
    w = ae.World(line(4), 2.0, seed=0)
    view = ae.LocalView(w, w.particles[0])
    assert view.kind((1, 0)) == ae.CONTRACTED
    assert view.kind((0, 1)) == ae.EMPTY
    with pytest.raises(ae.ConcurrencyViolation):
        view.kind((2, 0))


def test_flagged_pairs_checked():
    a = ae.ParticleState(0, (0, 0), (1, 0), True)
    b = ae.ParticleState(1, (3, 0), (4, 0), True)
    c = ae.ParticleState(2, (2, 0), None, True)  # touches (1, 0)
    ae._check_pair(a, b)
    with pytest.raises(ae.ConcurrencyViolation):
        ae._check_pair(a, c)


@pytest.mark.parametrize("lam", [1.0, 4.0])
def test_replay_and_disjointness_every_event(lam):
    w = ae.World(line(20), lam, rng=make_rng(8))
    trace = ae.Trace(initial=[p.tail for p in w.particles])
    for _ in range(5000):
        w.run(events=1, trace=trace)
        w.check_flagged_disjoint()
    w.settle(trace)
    assert w.expanded_count() == 0
    moves = ae.reduce_to_chain_trace(trace)
    rep = ae.replay_moves(trace.initial, moves, lam, ae.completed_qs(trace))
    assert rep.invalid == [] and rep.rejected == []
    assert rep.cells == w.projection()
    assert audit(w.projection()) == []
    assert len(moves) > 0


def test_run_is_seed_deterministic():
    w1, t1 = ae.run(line(12), 4.0, events=3000, seed=5)
    w2, t2 = ae.run(line(12), 4.0, events=3000, seed=5)
    assert t1.records == t2.records and w1.projection() == w2.projection()


def test_time_horizon():
    w, t = ae.run(line(8), 4.0, until=5.0, seed=1)
    assert all(r.time <= 5.0 for r in t.records)
    assert w.queue[0][0] > 5.0


def test_trace_csv_roundtrip(tmp_path):
    w, t = ae.run(line(6), 4.0, events=300, seed=3)
    path = tmp_path / "trace.csv"
    t.write_csv(path)
    back = ae.read_trace_csv(path)
    assert [(r.particle, r.action, r.dir, r.flag) for r in back] == [
        (r.particle, r.action, r.dir, r.flag) for r in t.records
    ]
    assert all(a.q == b.q and a.time == b.time for a, b in zip(back, t.records))


def test_trace_rows_without_time():
    buf = io.StringIO()
    ae.write_trace_rows(buf, [ae.ActionRecord(0.0, 3, ae.CONTRACT_HEAD, None, 2, True)], with_time=False)
    assert buf.getvalue().splitlines() == ["particle,action,q,dir,flag", "3,contract_head,,2,1"]


def test_replay_flags_invalid_moves():
    rep = ae.replay_moves([(0, 0), (1, 0)], [Move((0, 0), (3, 3))])
    assert rep.invalid == [0]
