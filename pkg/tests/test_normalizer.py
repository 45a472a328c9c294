import pytest
from hypothesis import given, settings

from sops_compression import exactsolver as ex
from sops_compression import normalizer as nz
from sops_compression.configuration import canonical_key, hexagon, line
from sops_compression.dynamics import is_valid_move
from sops_compression.rng import make_rng
from sops_compression.samplers import random_state

from conftest import grown_states

# states from random search that exercise rare gap-creation branches; the
# "off_prefix" ones create a gap facing the unexplored part of the walk,
# which must be left alone
BRANCH_STATES = {
    "gc_fill": [(-2, -1), (-2, 0), (-2, 2), (-1, 0), (-1, 2), (0, -2), (0, 0), (0, 2), (0, 3), (1, -3), (1, -2), (1, -1), (1, 0), (1, 1), (2, -4), (2, -3), (2, -2), (2, 0), (3, -4), (3, -3), (3, -1), (4, -2)],
    "gc_recurse_across": [(-6, 4), (-6, 5), (-5, 1), (-5, 4), (-5, 5), (-4, 1), (-4, 3), (-4, 4), (-3, 1), (-3, 4), (-3, 5), (-3, 6), (-2, 1), (-2, 2), (-2, 3), (-2, 4), (-1, -2), (-1, -1), (-1, 2), (-1, 3), (0, -1), (0, 0), (0, 1), (0, 3), (0, 4), (1, -1), (1, 1), (2, -1)],
    "off_prefix_a": [(11, 7), (12, 6), (13, 3), (13, 4), (13, 5), (13, 6), (13, 7), (14, 2), (14, 4), (14, 5), (15, -1), (15, 0), (15, 2), (16, 0), (16, 1), (16, 2), (17, 0), (18, -2), (18, -1), (19, -1), (20, -2), (21, -2), (22, -3), (23, -3), (23, -2), (23, -1), (24, -1)],
    "off_prefix_b": [(10, 2), (11, 0), (11, 1), (12, 1), (13, -4), (13, -3), (13, -2), (13, -1), (13, 1), (13, 2), (14, -5), (14, -1), (14, 0), (15, -6), (16, -9), (16, -8), (16, -7), (16, -6), (16, -5), (16, -4), (17, -8), (17, -4), (18, -8), (18, -4), (19, -8), (19, -7), (19, -6)],
    "off_prefix_c": [(5, 1), (6, 1), (6, 2), (6, 3), (6, 5), (7, 0), (7, 4), (7, 5), (7, 6), (8, -1), (8, 0), (8, 2), (8, 3), (9, 0), (9, 2), (9, 3), (10, 0), (10, 1), (11, -4), (11, -3), (11, -1), (12, -4), (12, -3), (12, -2), (13, -3)],
    # eliminations leave the anchor's only body neighbor below-right of it,
    # so the anchor and the line step down
    "reanchor_a": [(6, 2), (6, 3), (7, 2), (7, 5), (8, 1), (8, 3), (8, 4), (8, 5), (9, 1), (9, 2), (9, 5), (9, 6), (9, 7), (10, 1), (11, 0), (12, 0), (13, -2), (13, -1), (13, 0), (14, -1)],
    "reanchor_b": [(-5, 2), (-4, 1), (-3, 1), (-2, 0), (-2, 2), (-1, 0), (-1, 1), (0, -1), (0, 0), (0, 2), (1, -1), (1, 0), (1, 1), (2, -2)],
    "reanchor_c": [(5, -1), (6, -1), (7, -2), (7, 0), (8, -3), (8, -1), (9, -4), (9, -3), (9, -2), (10, -4), (10, -3), (11, -4), (11, -3), (11, -2), (12, -5), (13, -5)],
}


def _check(sigma):
    st = nz.normalize(sigma)
    final = nz.replay(sigma, st.moves)
    assert final == st.cells
    assert nz.is_line(final)
    assert canonical_key(final) == nz.canonical_line(len(sigma))
    assert nz.check_reverse(sigma, st.moves)
    return st


def test_is_line():
    assert nz.is_line({(0, 0)})
    assert nz.is_line({(2, -3), (2, -2), (2, -1)})
    assert not nz.is_line(line(3).occupied)  # horizontal line
    assert nz.canonical_line(3) == ((0, 0), (0, 1), (0, 2))


def test_line_already_in_place():
    # the anchor is the bottom end, so every other particle is walked
    # around it and the line is rebuilt below it
    sigma = {(0, -k) for k in range(6)}
    st = nz.normalize(sigma)
    assert st.cells == {(0, -5 - k) for k in range(6)}


def test_single_particle():
    st = nz.normalize({(4, 4)})
    assert st.moves == [] and st.cells == {(4, 4)}


def test_hexagon_and_horizontal_line():
    _check(hexagon(2).occupied)
    _check(line(12).occupied)


@pytest.mark.parametrize("n", range(2, 6))
def test_every_small_state(n):
    for key in ex.enumerate_keys(n):
        _check(set(key))


@pytest.mark.parametrize("branch", sorted(BRANCH_STATES))
def test_repair_branches(branch):
    st = _check(set(BRANCH_STATES[branch]))
    expect = branch
    if branch.startswith("off_prefix"):
        expect = "gc_gap_off_prefix"
    elif branch.startswith("reanchor"):
        expect = "reanchor"
    assert st.branches[expect] >= 1


@given(grown_states(18))
@settings(max_examples=60)
def test_random_states_property(cells):
    _check(cells)


def test_random_mixed_states():
    rng = make_rng(404)
    for _ in range(40):
        n = int(rng.integers(2, 31))
        _check(random_state(n, rng))


def test_reverse_with_exact_probabilities():
    sigma = {(0, 0), (1, 0), (2, 0), (1, 1), (3, -1)}
    st = nz.normalize(sigma)
    assert nz.check_reverse(sigma, st.moves, lam=2.0, exact=True)


def test_logged_moves_are_valid_and_ids_stable():
    sigma = set(BRANCH_STATES["off_prefix_a"])
    st = nz.normalize(sigma)
    pos = {i: c for i, c in enumerate(sorted(sigma))}
    cells = set(sigma)
    for m in st.moves:
        assert pos[m.particle] == m.src
        assert is_valid_move(cells, m.src, m.dst)
        cells.remove(m.src)
        cells.add(m.dst)
        pos[m.particle] = m.dst
        assert m.direction is not None


def test_rejects_bad_input():
    with pytest.raises(nz.NormalizerError):
        nz.normalize({(0, 0), (3, 0)})
    ring = {(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)}
    with pytest.raises(nz.NormalizerError):
        nz.normalize(ring)


def test_replay_rejects_invalid_log():
    bad = [nz.LoggedMove(0, (0, 0), (5, 5))]
    with pytest.raises(nz.NormalizerError):
        nz.replay({(0, 0), (1, 0)}, bad)


def test_anchor_moves_only_before_eliminations():
    st = nz.new_state({(0, 0), (1, 0)})
    st.eliminated = 1
    with pytest.raises(nz.NormalizerError):
        nz.initialize_anchor(st)
