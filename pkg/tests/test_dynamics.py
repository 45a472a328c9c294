import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sops_compression.configuration import audit, has_hole, hexagon, is_connected, line, triangle_count
from sops_compression.dynamics import (
    Chain,
    ChainParams,
    Move,
    acceptance,
    delta_triangles,
    is_valid_move,
    step,
    transition_probability,
    valid_moves,
)
from sops_compression.fastchain import FastChain, move_tables, ring_offsets
from sops_compression.lattice import extended_neighborhood, neighbor, rotate, to_cartesian
from sops_compression.rng import make_rng

from conftest import grown_states


# ---------------------------------------------------------------- oracle
# Move rules restated over points of the plane: adjacency is Euclidean
# distance 1 in the standard embedding, nothing from the lattice module.


def _adj(a, b):
    (x1, y1), (x2, y2) = to_cartesian(a), to_cartesian(b)
    return abs(math.hypot(x1 - x2, y1 - y2) - 1.0) < 1e-9


def _nbrs(c, pool):
    return [x for x in pool if _adj(c, x)]


def _linked(group, pool, roots):
    """Every member of ``group`` reaches ``roots`` via cells of ``pool``."""
    seen = set(roots)
    todo = list(roots)
    while todo:
        c = todo.pop()
        for x in pool:
            if x not in seen and _adj(c, x):
                seen.add(x)
                todo.append(x)
    return set(group) <= seen


def oracle_valid(cells, src, dst):
    others = set(cells) - {src}
    window = {(src[0] + i, src[1] + j) for i in range(-3, 4) for j in range(-3, 4)}
    around = [x for x in window if x not in (src, dst) and (_adj(x, src) or _adj(x, dst))]
    occ = [x for x in around if x in others]
    if len([x for x in occ if _adj(x, src)]) == 5:
        return False
    s = [x for x in occ if _adj(x, src) and _adj(x, dst)]
    if s:
        return _linked(occ, occ, s)
    a = [x for x in occ if _adj(x, src)]
    b = [x for x in occ if _adj(x, dst)]
    if not a or not b:
        return False
    return _linked(a, a, a[:1]) and _linked(b, b, b[:1])


def oracle_triangles(cells):
    pts = sorted(cells)
    return sum(
        1
        for i in range(len(pts))
        for j in range(i + 1, len(pts))
        for k in range(j + 1, len(pts))
        if _adj(pts[i], pts[j]) and _adj(pts[j], pts[k]) and _adj(pts[i], pts[k])
    )


# ---------------------------------------------------------------- validity


def test_tables_match_oracle_for_all_patterns():
    valid, dt = move_tables()
    src = (0, 0)
    for d in range(6):
        dst = neighbor(src, d)
        ring = extended_neighborhood(src, dst)
        for mask in range(256):
            cells = {src} | {ring[k] for k in range(8) if mask >> k & 1}
            assert bool(valid[d, mask]) == oracle_valid(cells, src, dst), (d, mask)
            after = (cells - {src}) | {dst}
            assert dt[d, mask] == oracle_triangles(after) - oracle_triangles(cells)


def test_tables_rotation_invariant():
    valid, dt = move_tables()
    dq, dr = ring_offsets()
    for d in range(6):
        ring = [(int(dq[d, k]), int(dr[d, k])) for k in range(8)]
        ring0 = [(int(dq[0, k]), int(dr[0, k])) for k in range(8)]
        assert ring == [rotate(c, d) for c in ring0]
        assert (valid[d] == valid[0]).all() and (dt[d] == dt[0]).all()
    assert valid.sum() > 0 and not valid.flags.writeable


@given(grown_states(14))
def test_valid_moves_match_oracle(cells):
    for src in sorted(cells):
        for d in range(6):
            dst = neighbor(src, d)
            if dst in cells:
                assert not is_valid_move(cells, src, dst)
                continue
            assert is_valid_move(cells, src, dst) == oracle_valid(cells, src, dst)


@given(grown_states(18))
def test_valid_moves_preserve_invariants(cells):
    t = triangle_count(cells)
    for m in valid_moves(cells):
        after = (cells - {m.src}) | {m.dst}
        assert is_connected(after) and not has_hole(after)
        assert triangle_count(after) - t == m.dt == delta_triangles(cells, m.src, m.dst)


def test_reversibility_of_moves():
    # the reverse of every valid move is valid in the resulting state
    rng = make_rng(5)
    for _ in range(200):
        ch = FastChain(line(12), 2.0, rng=rng)
        ch.run(int(rng.integers(0, 3000)))
        cells = set(ch.positions)
        for m in valid_moves(cells):
            after = (cells - {m.src}) | {m.dst}
            assert is_valid_move(after, m.dst, m.src)


def test_move_signatures():
    cells = line(3).occupied
    assert is_valid_move(cells, Move((2, 0), (1, 1))) == is_valid_move(cells, (2, 0), (1, 1))
    assert not is_valid_move(cells, (2, 0), (4, 0))  # not adjacent
    assert not is_valid_move(cells, (9, 9), (9, 10))  # no particle


def test_condition_one_blocks_five_neighbors():
    # hexagon missing one outer cell: the center has five neighbors
    cells = hexagon(1).occupied - {(1, 0)}
    assert not is_valid_move(cells, (0, 0), (1, 0))


# ---------------------------------------------------------------- probabilities


def test_acceptance():
    assert acceptance(4.0, 2) == 1.0
    assert acceptance(4.0, -1) == 0.25
    assert acceptance(0.5, 1) == 0.5
    with pytest.raises(ValueError):
        ChainParams(0.0)


def test_triangle_exit_probability():
    # n=3 triangle, lambda=4: each exit loses one triangle, so each has
    # probability 1/(6*3) * 1/4 = 1/72
    tri = {(0, 0), (1, 0), (0, 1)}
    moves = valid_moves(tri)
    assert moves and all(m.dt == -1 for m in moves)
    for m in moves:
        tau = (tri - {m.src}) | {m.dst}
        p = transition_probability(tri, tau, 4.0)
        hits = sum(1 for k in moves if ((tri - {k.src}) | {k.dst}) == tau)
        assert p == pytest.approx(hits / 72)
    stay = transition_probability(tri, tri, 4.0)
    assert stay == pytest.approx(1 - len(moves) / 72)


@given(grown_states(10), st.sampled_from([0.5, 1.0, 2.0, 4.0]))
def test_diagonal_at_least_one_sixth(cells, lam):
    # at most 5n of the 6n draws can produce a move
    assert transition_probability(cells, cells, lam) >= 1 / 6 - 1e-12


def test_transition_probability_translation_and_size():
    a = {(0, 0), (1, 0)}
    b = {(5, 5), (6, 5)}
    # each particle of a pair may pivot onto either common neighbor: 4 of 12 draws leave
    assert transition_probability(a, b, 2.0) == pytest.approx(2 / 3)
    assert transition_probability(a, {(0, 0), (0, 1)}, 2.0) == pytest.approx(2 / 12)
    assert transition_probability(a, {(0, 0)}, 2.0) == 0.0


def test_functional_step_is_valid():
    rng = make_rng(9)
    sigma = line(10)
    for _ in range(500):
        nxt = step(sigma, ChainParams(4.0), rng)
        assert audit(nxt) == []
        sigma = nxt


# ---------------------------------------------------------------- engines


@pytest.mark.parametrize("lam", [0.5, 1.0, 4.0])
def test_fast_kernel_matches_reference_trajectory(lam):
    ref = Chain(line(15), lam, rng=make_rng(31))
    fast = FastChain(line(15), lam, rng=make_rng(31))
    for chunk in (1, 7, 1000, 40_000, 5):
        ref.run(chunk)
        fast.run(chunk)
        assert ref.positions == fast.positions
        assert ref.triangles == fast.triangles
    assert ref.accepted == fast.accepted


def test_fast_chain_stop_perimeter_and_rewind():
    a = FastChain(line(20), 4.0, rng=make_rng(3))
    used = a.run(10**7, stop_perimeter=30)
    assert a.perimeter <= 30 and used < 10**7
    # the unused draws are not lost: continuing equals one uninterrupted run
    a.run(5000)
    b = FastChain(line(20), 4.0, rng=make_rng(3))
    b.run(used + 5000)
    assert a.positions == b.positions


def test_chain_invariants_with_full_audit():
    ch = FastChain(line(40), 4.0, rng=make_rng(17))
    for _ in range(50):
        ch.run(2000)
        cells = set(ch.positions)
        assert audit(cells) == []
        assert triangle_count(cells) == ch.triangles
        assert 2 * 40 - ch.triangles - 2 == ch.perimeter


def test_seed_determinism():
    a = FastChain(line(30), 2.0, seed=4)
    b = FastChain(line(30), 2.0, seed=4)
    c = FastChain(line(30), 2.0, seed=5)
    a.run(20000)
    b.run(20000)
    c.run(20000)
    assert a.positions == b.positions
    assert a.positions != c.positions


def test_long_run_histogram_matches_exact():
    # lambda = 1 chain at n = 4: time average of perimeter vs exact stationary law
    from sops_compression.exactsolver import enumerate_states, stationary

    space = enumerate_states(4)
    pi = stationary(space, 1.0)
    exact = {}
    for p, w in zip(space.perimeters, pi):
        exact[int(p)] = exact.get(int(p), 0.0) + float(w)
    ch = FastChain(line(4), 1.0, rng=make_rng(77))
    counts = {}
    samples = 20000
    for _ in range(samples):
        ch.run(50)
        counts[ch.perimeter] = counts.get(ch.perimeter, 0) + 1
    chi2 = sum((counts.get(p, 0) - samples * q) ** 2 / (samples * q) for p, q in exact.items())
    # two perimeter classes (4 and 6) at n = 4, one degree of freedom
    assert set(counts) <= set(exact)
    assert chi2 < 15.0
