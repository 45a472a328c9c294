import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sops_compression.lattice import (
    DIRECTIONS,
    LatticeError,
    anchor_key,
    are_adjacent,
    common_neighbors,
    direction_between,
    distance,
    extended_neighborhood,
    faces_at,
    neighbor,
    neighbors,
    opposite,
    rotate,
    to_cartesian,
)

from conftest import cells


def test_neighbors_of_origin():
    assert neighbors((0, 0)) == [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]


def test_directions_are_unit_and_ccw():
    # unit length in the embedding, 60 degrees apart
    for d, off in enumerate(DIRECTIONS):
        x, y = to_cartesian(off)
        assert math.isclose(math.hypot(x, y), 1.0)
        assert math.isclose(math.degrees(math.atan2(y, x)) % 360, 60 * d, abs_tol=1e-9)


@given(cells, st.integers(0, 5))
def test_neighbor_roundtrip(c, d):
    b = neighbor(c, d)
    assert direction_between(c, b) == d
    assert direction_between(b, c) == opposite(d)
    assert are_adjacent(c, b) and distance(c, b) == 1


@given(cells, cells)
def test_distance_matches_embedding_bfs_bound(a, b):
    # distance is a metric and agrees with the symmetric formula
    assert distance(a, b) == distance(b, a)
    assert (distance(a, b) == 0) == (a == b)


def test_distance_against_bfs():
    # oracle: breadth-first search from the origin
    dist = {(0, 0): 0}
    frontier = [(0, 0)]
    for k in range(1, 6):
        nxt = []
        for c in frontier:
            for x in neighbors(c):
                if x not in dist:
                    dist[x] = k
                    nxt.append(x)
        frontier = nxt
    for c, k in dist.items():
        assert distance((0, 0), c) == k
    assert sum(1 for k in dist.values() if k == 3) == 18


@given(cells, st.integers(0, 5))
def test_common_neighbors_of_adjacent_pair(c, d):
    b = neighbor(c, d)
    common = common_neighbors(c, b)
    assert common == {neighbor(c, d + 1), neighbor(c, d - 1)}


def test_common_neighbors_errors_and_far():
    with pytest.raises(LatticeError):
        common_neighbors((0, 0), (0, 0))
    assert common_neighbors((0, 0), (3, 0)) == set()
    assert common_neighbors((0, 0), (2, 0)) == {(1, 0)}


@given(cells, st.integers(0, 5))
def test_extended_neighborhood_is_cycle(c, d):
    b = neighbor(c, d)
    ring = extended_neighborhood(c, b)
    assert len(set(ring)) == 8
    assert set(ring) == (set(neighbors(c)) | set(neighbors(b))) - {c, b}
    for i in range(8):
        assert are_adjacent(ring[i], ring[(i + 1) % 8])
    assert {ring[0], ring[4]} == common_neighbors(c, b)
    # counterclockwise: signed area of the ring polygon is positive
    pts = [to_cartesian(x) for x in ring]
    area = sum(pts[i][0] * pts[(i + 1) % 8][1] - pts[(i + 1) % 8][0] * pts[i][1] for i in range(8))
    assert area > 0


def test_extended_neighborhood_requires_adjacent():
    with pytest.raises(LatticeError):
        extended_neighborhood((0, 0), (2, 0))


@given(cells, st.integers(0, 5))
def test_rotation_preserves_adjacency(c, k):
    for d in range(6):
        assert direction_between(rotate(c, k), rotate(neighbor(c, d), k)) == (d + k) % 6
    assert rotate(c, 6) == c


def test_faces_are_triangles():
    for a, b in faces_at((2, -1)):
        assert are_adjacent(a, b)
        assert are_adjacent((2, -1), a) and are_adjacent((2, -1), b)


def test_anchor_key_orders_by_column_then_height():
    cs = [(0, 0), (-1, 1), (1, -2), (-1, 0)]
    # (1, -2) and (-1, 0) share column -1; (1, -2) is lower
    assert min(cs, key=anchor_key) == (1, -2)
    # cells of one column share q + r and the lower one wins
    assert anchor_key((1, -1)) < anchor_key((0, 0))
