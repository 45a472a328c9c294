"""Random connected hole-free configurations for tests and experiments."""

from __future__ import annotations

from typing import Set

import numpy as np

from .configuration import has_hole, line
from .fastchain import FastChain
from .lattice import Cell, neighbors


def random_growth(n: int, rng: np.random.Generator) -> Set[Cell]:
    """Grow from one cell by adding uniformly chosen frontier cells, never closing a hole."""
    cells = {(0, 0)}
    while len(cells) < n:
        frontier = sorted({x for c in cells for x in neighbors(c) if x not in cells})
        order = rng.permutation(len(frontier))
        for k in order:
            x = frontier[k]
            cells.add(x)
            if not has_hole(cells):
                break
            cells.remove(x)
    return cells


def random_chain_state(n: int, rng: np.random.Generator, lam: float = None, steps: int = None) -> Set[Cell]:
    """State of the chain after a random number of steps from a line."""
    if lam is None:
        lam = float(rng.choice([0.5, 1.0, 2.0, 4.0, 8.0]))
    if steps is None:
        steps = int(rng.integers(0, 200 * n * n))
    chain = FastChain(line(n), lam, rng=rng)
    chain.run(steps)
    return set(chain.positions)


def random_state(n: int, rng: np.random.Generator) -> Set[Cell]:
    if rng.random() < 0.5:
        return random_growth(n, rng)
    return random_chain_state(n, rng)
