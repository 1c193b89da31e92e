"""Pure-Python simulation kernels (fallback backend).

These are the reference implementations of the two hot loops: the
nested-square stopping-set episode for the full model and the trapezoid
sampler for the half model.  The compiled Cython kernels in
``_kernels.pyx`` mirror this code line for line; every floating-point
expression is written in the same order there so the two backends
produce bit-identical results (CPython floats and C doubles share libm
and IEEE-754 semantics; the extension is compiled with FMA contraction
disabled).

Per-episode RNG streams are derived from (master_seed, episode index) so
any sharding of episodes over workers reproduces the same numbers.
"""

from __future__ import annotations

import sys
from math import inf, log, sqrt

from .rng import derive_state

# block() recurses through chains of mutually shading seeds; depth is
# bounded by the episode's seed count, which can exceed CPython's
# default 1000-frame limit at large n_cap.
if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)

_MASK = (1 << 64) - 1
_INV53 = 1.0 / 9007199254740992.0

backend_name = "python"


def _make_uniform(master_seed: int, stream_index: int):
    """Closure producing uniforms on (0, 1] from one xoshiro256++ stream."""
    s0, s1, s2, s3 = derive_state(master_seed, stream_index)

    def u() -> float:
        nonlocal s0, s1, s2, s3
        x = (s0 + s3) & _MASK
        res = ((((x << 23) | (x >> 41)) & _MASK) + s0) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK
        return ((res >> 11) + 1) * _INV53

    return u


def episode_fill(master_seed, start_index, count, q, n_cap, out):
    """Run ``count`` independent episodes; write each blocking index n*.

    ``out[e]`` receives n* of episode ``start_index + e`` (0 marks a
    cap-hit, i.e. the ray was still unblocked after n_cap squares).

    One episode grows nested squares S_k with exponential area
    increments, placing seed k uniformly on the two eastern frontier
    sides of S_k.  A V-type seed whose ray toward the axis is unblocked
    contributes its x-coordinate as a crossing candidate; the episode
    ends at the first k where the minimum crossing X satisfies
    2 X^2 < A_{k+1} (the crossing lies inside S_{k+1}'s half-diagonal).
    """
    xs = [0.0] * n_cap
    ys = [0.0] * n_cap
    kinds = [False] * n_cap  # True = H-type
    fbd = [0.0] * (4 * n_cap)  # per (seed, direction): largest d known unblocked
    tbd = [inf] * (4 * n_cap)  # smallest d known blocked
    A = [0.0] * (n_cap + 2)
    n_seeds = 0

    def block(i, d, dr):
        # dr: 0=E 1=W 2=N 3=S.  True iff seed i's ray in direction dr is
        # blocked within distance d.  Monotone bounds memoize answers:
        # unblocked at d stays unblocked for smaller d, blocked at d
        # stays blocked for larger d.
        b4 = 4 * i + dr
        if d <= fbd[b4]:
            return False
        if d >= tbd[b4]:
            return True
        xi = xs[i]
        yi = ys[i]
        want_h = dr >= 2  # vertical rays are blocked by H seeds
        res = False
        for jj in range(n_seeds):
            if jj == i or kinds[jj] != want_h:
                continue
            if dr == 0:
                a = xs[jj] - xi
                b = ys[jj] - yi
            elif dr == 1:
                a = xi - xs[jj]
                b = ys[jj] - yi
            elif dr == 2:
                a = ys[jj] - yi
                b = xs[jj] - xi
            else:
                a = yi - ys[jj]
                b = xs[jj] - xi
            if a < 0.0 or a > d:
                continue
            ab = -b if b < 0.0 else b
            if ab > a:
                continue
            # candidate blocker: recurse on its own ray toward the path
            if dr <= 1:
                sub = 3 if ys[jj] > yi else 2
            else:
                sub = 1 if xs[jj] > xi else 0
            if not block(jj, ab, sub):
                res = True
                break
        if res:
            if d < tbd[b4]:
                tbd[b4] = d
        else:
            if d > fbd[b4]:
                fbd[b4] = d
        return res

    for e in range(count):
        u = _make_uniform(master_seed, start_index + e)
        A[1] = -log(u())
        A[2] = A[1] - log(u())
        X = inf
        n_seeds = 0
        result = 0
        for k in range(1, n_cap + 1):
            Dk = sqrt(2.0 * A[k])
            side = u()
            t = u()
            x = 0.5 * Dk * (1.0 + t)
            y = 0.5 * Dk * (1.0 - t)
            if side > 0.5:
                y = -y
            kind_h = u() <= q
            i = k - 1
            xs[i] = x
            ys[i] = y
            kinds[i] = kind_h
            b4 = 4 * i
            fbd[b4] = fbd[b4 + 1] = fbd[b4 + 2] = fbd[b4 + 3] = 0.0
            tbd[b4] = tbd[b4 + 1] = tbd[b4 + 2] = tbd[b4 + 3] = inf
            n_seeds = k
            if not kind_h:
                ay = -y if y < 0.0 else y
                dr = 3 if y > 0.0 else 2
                if not block(i, ay, dr) and x < X:
                    X = x
            if 2.0 * X * X < A[k + 1]:
                result = k
                break
            if k < n_cap:
                A[k + 2] = A[k + 1] - log(u())
        out[e] = result


def half_fill(master_seed, start_index, count, q, lam, out_len, out_steps):
    """Sample ``count`` half-model ray lengths into ``out_len``.

    Each step inverts the trapezoid-area law r*y + r^2/2 = E/lambda for
    the base length r (written in the cancellation-free form
    c / (y + sqrt(y^2 + c))), terminates on a V-type stopping seed with
    probability 1-q, and otherwise draws the new boundary height
    uniformly on (0, r + y).
    """
    pv = 1.0 - q
    for e in range(count):
        u = _make_uniform(master_seed, start_index + e)
        y = 0.0
        xt = 0.0
        steps = 0
        while True:
            steps += 1
            E = -log(u())
            c = 2.0 * E / lam
            r = 0.0 if c == 0.0 else c / (y + sqrt(y * y + c))
            xt = xt + r
            if u() <= pv:
                break
            y = u() * (r + y)
        out_len[e] = xt
        out_steps[e] = steps
