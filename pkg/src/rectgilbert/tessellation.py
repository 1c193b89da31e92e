"""Finite-window realisations of the rectangular Gilbert tessellations.

Seeds arrive as a Poisson process on a window buffered by a margin;
every seed grows two axis-aligned rays (H seeds east+west, V seeds
north+south) at unit speed from time zero.  Ray a is blocked at a
crossing point p by transversal ray b when b reaches p no later than a
does (ties go to the blocker) and b itself survives to p.  The full
model lets any transversal ray block; the half model restricts blocking
to the reciprocal pairs east↔south and west↔north.

The resolver answers bounded queries "does ray b reach distance t?" by
scanning b's candidate blockers in increasing crossing distance and
recursing on each candidate's own survival up to its (strictly smaller)
arrival distance, so the recursion provably terminates.  Exact stop
distances discovered along the way are memoized.

Rays that reach the buffer boundary unblocked are truncated there and
flagged; statistics should use non-truncated rays seeded in the inner
window, and the residual edge bias decays as the margin grows (the
default margin is 8/√λ).
"""

from __future__ import annotations

import math
import sys
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from .fullsim import Seed

__all__ = [
    "Window",
    "RaySegment",
    "RenderStyle",
    "generate",
    "render_svg",
    "to_csv",
    "interior_lengths",
]

if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)

_MAX_SEEDS = 10**6


@dataclass(frozen=True)
class Window:
    """View rectangle [0,width]×[0,height] plus a simulation margin.

    Seeds are generated on the buffered rectangle; rendering and
    statistics clip to the inner one.  ``margin=None`` means the
    λ-dependent default 8/√λ chosen at generation time.
    """

    width: float
    height: float
    margin: float | None = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"window sides must be positive, got {self}")
        if self.margin is not None and self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")


@dataclass(frozen=True)
class RaySegment:
    """One resolved ray: owner seed, compass direction, final length.

    ``truncated`` marks rays that reached the buffer edge unblocked;
    their true length is unknown and at least the recorded one.
    """

    seed: Seed
    direction: str
    length: float
    truncated: bool

    def endpoints(self) -> tuple[tuple[float, float], tuple[float, float]]:
        x, y = self.seed.x, self.seed.y
        dx, dy = {"E": (1, 0), "W": (-1, 0), "N": (0, 1), "S": (0, -1)}[
            self.direction]
        return (x, y), (x + dx * self.length, y + dy * self.length)


# Legal (blocked ray, blocking ray) direction pairs, by model.
_HALF_PAIRS = {(0, 3), (3, 0), (1, 2), (2, 1)}  # E↔S, W↔N
_DIR_LETTERS = "EWNS"


class _Resolver:
    """Memoized bounded-survival queries over one seed realisation."""

    def __init__(self, model: str, xs, ys, kinds,
                 xmin: float, xmax: float, ymin: float, ymax: float):
        self.full = model == "full"
        self.xs = xs
        self.ys = ys
        self.bounds = (xmin, xmax, ymin, ymax)
        # V seeds ordered by x feed horizontal-ray scans; H seeds
        # ordered by y feed vertical-ray scans.
        v = sorted(i for i in range(len(xs)) if not kinds[i])
        h = sorted(i for i in range(len(xs)) if kinds[i])
        self.v_id = sorted(v, key=lambda i: xs[i])
        self.v_x = [xs[i] for i in self.v_id]
        self.h_id = sorted(h, key=lambda i: ys[i])
        self.h_y = [ys[i] for i in self.h_id]
        self.stop_at: dict[int, float] = {}   # ray key -> exact stop distance
        self.free_to: dict[int, float] = {}   # ray key -> verified reach

    def _first_blocker(self, i: int, dr: int, t: float) -> float | None:
        """Smallest crossing distance < t at which ray (i, dr) is blocked.

        Scans candidates in increasing crossing distance; a candidate
        blocks iff its arrival distance dc <= the crossing distance cc
        (tie: blocker wins) and it survives to dc.  Returns None when no
        candidate below t blocks, which certifies survival to t.
        """
        xs, ys = self.xs, self.ys
        xi = xs[i]
        yi = ys[i]
        full = self.full
        if dr <= 1:  # horizontal ray: candidates are V seeds, by x
            ids, key_x = self.v_id, self.v_x
            if dr == 0:
                pos, step_ = bisect_right(key_x, xi), 1
            else:
                pos, step_ = bisect_left(key_x, xi) - 1, -1
            while 0 <= pos < len(ids):
                j = ids[pos]
                pos += step_
                cc = xs[j] - xi if dr == 0 else xi - xs[j]
                if cc >= t:
                    return None
                yj = ys[j]
                if dr == 0:
                    if yj >= yi:
                        dc, sub = yj - yi, 3       # south ray from above
                    elif full:
                        dc, sub = yi - yj, 2       # north ray from below
                    else:
                        continue
                else:
                    if yj <= yi:
                        dc, sub = yi - yj, 2       # north ray from below
                    elif full:
                        dc, sub = yj - yi, 3
                    else:
                        continue
                if dc <= cc and self._survives(j, sub, dc):
                    assert self.full or (dr, sub) in _HALF_PAIRS
                    return cc
            return None
        # vertical ray: candidates are H seeds, by y
        ids, key_y = self.h_id, self.h_y
        if dr == 2:
            pos, step_ = bisect_right(key_y, yi), 1
        else:
            pos, step_ = bisect_left(key_y, yi) - 1, -1
        while 0 <= pos < len(ids):
            j = ids[pos]
            pos += step_
            cc = ys[j] - yi if dr == 2 else yi - ys[j]
            if cc >= t:
                return None
            xj = xs[j]
            if dr == 2:
                if xj >= xi:
                    dc, sub = xj - xi, 1           # west ray from the east
                elif full:
                    dc, sub = xi - xj, 0
                else:
                    continue
            else:
                if xj <= xi:
                    dc, sub = xi - xj, 0           # east ray from the west
                elif full:
                    dc, sub = xj - xi, 1
                else:
                    continue
            if dc <= cc and self._survives(j, sub, dc):
                assert self.full or (dr, sub) in _HALF_PAIRS
                return cc
        return None

    def _survives(self, j: int, dr: int, t: float) -> bool:
        """Does ray (j, dr) reach distance t (blocked no earlier than t)?"""
        key = (j << 2) | dr
        stop = self.stop_at.get(key)
        if stop is not None:
            return t <= stop
        if t <= self.free_to.get(key, 0.0):
            return True
        cc = self._first_blocker(j, dr, t)
        if cc is None:
            self.free_to[key] = t
            return True
        self.stop_at[key] = cc  # ascending scan => global first blocker
        return t <= cc

    def resolve(self, i: int, dr: int) -> tuple[float, bool]:
        """Final (length, truncated) for ray (i, dr) within the buffer."""
        xmin, xmax, ymin, ymax = self.bounds
        xi, yi = self.xs[i], self.ys[i]
        exit_d = (xmax - xi, xi - xmin, ymax - yi, yi - ymin)[dr]
        key = (i << 2) | dr
        stop = self.stop_at.get(key)
        if stop is None and exit_d > self.free_to.get(key, 0.0):
            cc = self._first_blocker(i, dr, exit_d)
            if cc is None:
                self.free_to[key] = exit_d
            else:
                self.stop_at[key] = cc
            stop = cc
        if stop is not None and stop <= exit_d:
            return stop, False
        return exit_d, True


def generate(model: str, q: float, lam: float, window: Window,
             rng) -> list[RaySegment]:
    """Realize one tessellation and resolve every ray.

    Poisson(λ·buffered area) seeds are drawn uniformly on the buffered
    window (expected count capped at 10⁶), each marked H with
    probability q, and all 2·N rays are resolved deterministically from
    the supplied rng's stream.
    """
    if model not in ("full", "half"):
        raise ValueError(f"model must be 'full' or 'half', got {model!r}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    margin = window.margin if window.margin is not None else 8.0 / math.sqrt(lam)
    xmin, xmax = -margin, window.width + margin
    ymin, ymax = -margin, window.height + margin
    mean_count = lam * (xmax - xmin) * (ymax - ymin)
    if mean_count > _MAX_SEEDS:
        raise ValueError(
            f"expected seed count {mean_count:.3g} exceeds the "
            f"{_MAX_SEEDS} resolver cap; shrink the window or lambda")
    u = rng.random
    count = 0
    acc = -math.log(u())
    while acc <= mean_count:
        count += 1
        acc -= math.log(u())
    xs = [0.0] * count
    ys = [0.0] * count
    kinds = [False] * count
    for i in range(count):
        xs[i] = xmin + u() * (xmax - xmin)
        ys[i] = ymin + u() * (ymax - ymin)
        kinds[i] = u() <= q
    resolver = _Resolver(model, xs, ys, kinds, xmin, xmax, ymin, ymax)
    segments = []
    for i in range(count):
        dirs = (0, 1) if kinds[i] else (2, 3)
        seed = Seed(xs[i], ys[i], "H" if kinds[i] else "V")
        for dr in dirs:
            length, truncated = resolver.resolve(i, dr)
            segments.append(RaySegment(seed=seed, direction=_DIR_LETTERS[dr],
                                       length=length, truncated=truncated))
    return segments


@dataclass(frozen=True)
class RenderStyle:
    """Vector-rendering knobs; defaults give a Figure-1-like look."""

    scale: float = 50.0        # pixels per model unit
    stroke: str = "#000000"
    stroke_width: float = 1.0  # pixels
    background: str = "#ffffff"


def _clip(seg: RaySegment, width: float, height: float):
    """Axis-aligned clip of a segment to [0,width]×[0,height], or None."""
    (x0, y0), (x1, y1) = seg.endpoints()
    if seg.direction in ("E", "W"):
        if not 0.0 <= y0 <= height:
            return None
        xa, xb = min(x0, x1), max(x0, x1)
        xa, xb = max(xa, 0.0), min(xb, width)
        if xa > xb:
            return None
        return xa, y0, xb, y0
    if not 0.0 <= x0 <= width:
        return None
    ya, yb = min(y0, y1), max(y0, y1)
    ya, yb = max(ya, 0.0), min(yb, height)
    if ya > yb:
        return None
    return x0, ya, x0, yb


def render_svg(segments, window: Window, style: RenderStyle | None = None) -> str:
    """Deterministic SVG of the segments clipped to the inner window.

    Identical inputs yield a byte-identical document: coordinates are
    emitted with a fixed pixel format in input order, and the y axis is
    flipped so north points up.
    """
    style = style or RenderStyle()
    w_px = window.width * style.scale
    h_px = window.height * style.scale
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w_px:.2f}" '
        f'height="{h_px:.2f}" viewBox="0 0 {w_px:.2f} {h_px:.2f}">',
        f'<rect width="{w_px:.2f}" height="{h_px:.2f}" '
        f'fill="{style.background}"/>',
        f'<g stroke="{style.stroke}" stroke-width="{style.stroke_width:.2f}" '
        'stroke-linecap="square">',
    ]
    for seg in segments:
        clipped = _clip(seg, window.width, window.height)
        if clipped is None:
            continue
        xa, ya, xb, yb = clipped
        out.append(
            '<line x1="%.3f" y1="%.3f" x2="%.3f" y2="%.3f"/>'
            % (xa * style.scale, (window.height - ya) * style.scale,
               xb * style.scale, (window.height - yb) * style.scale))
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


CSV_HEADER = "# rectgilbert-segments/1"


def to_csv(segments) -> str:
    """Versioned CSV dump of a segment list (full float precision)."""
    lines = [CSV_HEADER, "seed_x,seed_y,kind,direction,length,truncated"]
    for s in segments:
        lines.append(f"{s.seed.x!r},{s.seed.y!r},{s.seed.kind},"
                     f"{s.direction},{s.length!r},{int(s.truncated)}")
    return "\n".join(lines) + "\n"


def interior_lengths(segments, window: Window, direction: str = "E",
                     model_margin: float = 0.0) -> np.ndarray:
    """Lengths of non-truncated rays of one direction seeded in the
    inner window (shrunk by ``model_margin`` on every side).

    These are the rays used for boundary-bias-controlled statistics.
    """
    w, h = window.width, window.height
    m = model_margin
    vals = [
        s.length
        for s in segments
        if s.direction == direction and not s.truncated
        and m <= s.seed.x <= w - m and m <= s.seed.y <= h - m
    ]
    return np.asarray(vals, dtype=np.float64)
