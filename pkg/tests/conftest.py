"""Shared fixtures and the brute-force growth-ordering oracle.

The oracle re-derives ray blocking from first principles — process every
potential blocking event in increasing arrival time of the *blocked* ray
— with none of the recursion or memoization of the production code, so
the two can only agree by computing the same thing.
"""

from __future__ import annotations

import math
from fractions import Fraction

import pytest

from rectgilbert import recurrence
from rectgilbert.fullsim import Seed

_DIR_INDEX = {"E": 0, "W": 1, "N": 2, "S": 3}


def _relative(x0: float, y0: float, dr: int, xj: float, yj: float):
    """(along, across) coordinates of point j seen from a directed ray."""
    if dr == 0:
        return xj - x0, yj - y0
    if dr == 1:
        return x0 - xj, yj - y0
    if dr == 2:
        return yj - y0, xj - x0
    return y0 - yj, xj - x0


def _toward_sub(dr: int, b: float) -> int:
    """Direction of the candidate's own ray toward the queried path."""
    if dr <= 1:  # horizontal path; blocker approaches vertically
        return 3 if b > 0.0 else 2
    return 1 if b > 0.0 else 0


def growth_order_block(s_star: Seed, d: float, u: str, seeds) -> bool:
    """Event-ordered reference for ``fullsim.block``.

    Every directed ray of every seed (and the query ray, which blocks
    nothing) gets a stop distance.  Candidate events are processed in
    increasing arrival time of the blocked ray; by the time an event is
    examined, every event that could have stopped its blocker earlier
    has already been applied, so a single pass yields the fixed point.
    Ties are measure-zero for the random configurations used in tests.
    """
    others = [s for s in seeds if s is not s_star]
    rays = [("q", _DIR_INDEX[u])]
    for j, s in enumerate(others):
        rays.extend((j, dr) for dr in ((0, 1) if s.kind == "H" else (2, 3)))
    origin = {"q": (s_star.x, s_star.y)}
    for j, s in enumerate(others):
        origin[j] = (s.x, s.y)

    events = []  # (cc, blocked ray, blocker ray, dc)
    for owner, dr in rays:
        x0, y0 = origin[owner]
        want_h = dr >= 2
        for j, s in enumerate(others):
            if j == owner or (s.kind == "H") != want_h:
                continue
            a, b = _relative(x0, y0, dr, s.x, s.y)
            ab = abs(b)
            if a < 0.0 or ab > a:
                continue
            events.append((a, (owner, dr), (j, _toward_sub(dr, b)), ab))
    events.sort(key=lambda e: e[0])

    stop = {r: math.inf for r in rays}
    for cc, blocked, blocker, dc in events:
        if stop[blocked] <= cc:
            continue  # already stopped at or before this crossing
        if stop[blocker] >= dc:  # blocker's segment reaches the crossing
            stop[blocked] = cc
    return stop[("q", _DIR_INDEX[u])] <= d


@pytest.fixture(scope="session")
def h_half_small():
    """Exact h_0..h_12 at q = 1/2 (cheap, shared across tests)."""
    return recurrence.compute_h(Fraction(1, 2), 12)
