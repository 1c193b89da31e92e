"""Stopping-set Monte Carlo for the full rectangular Gilbert model.

A test ray grows east from the origin while nested rotated squares S_1
⊂ S_2 ⊂ ... grow around it with independent Exp(1) area increments; the
k-th square deposits one uniformly placed seed on its eastern frontier.
A vertically growing (V) seed whose own ray toward the axis is not
shaded blocks the test ray at its x-coordinate, and the episode ends at
the first k for which the minimum blocking abscissa X satisfies
2 X^2 < A_{k+1}, i.e. the block lands inside the half-diagonal of
S_{k+1}.  That index n* is the episode's blocking index, and the
fraction of episodes with n* > n estimates the survival probability
h̄_n of the ray-length series.

The distribution of n* is independent of the seed intensity λ — the
construction is self-similar and λ only rescales lengths — so episodes
are simulated at λ = 1 and λ enters only when lengths are reported.

Everything here is exact-arithmetic-friendly at the edges (estimated
h̄_n are returned as fractions) and deterministic: episode e draws from
an RNG stream derived from (master_seed, e), so results are independent
of chunking and thread count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import backend
from .recurrence import as_fraction, compute_h, survival_taylor_coefficients

__all__ = [
    "Seed",
    "EpisodeRecord",
    "HHatEstimate",
    "TaylorRow",
    "EXACT_HBAR",
    "DEFAULT_N_CAP",
    "block",
    "run_episode",
    "estimate",
    "mean_length",
    "naive_h_hat",
    "ray_survival",
    "ray_pdf",
    "distribution_table",
    "line_length_distribution",
    "taylor_check",
]

#: Exact survival probabilities h̄_0..h̄_3 of the full model at q = ½,
#: known in closed form; the Monte Carlo estimates are checked against
#: them and the Taylor comparison below is built from them.
EXACT_HBAR = (Fraction(1), Fraction(3, 4), Fraction(7, 12), Fraction(7, 15))

#: Default episode cap.  The largest blocking index ever observed in a
#: very long published run was below 1000, so 2048 makes cap hits
#: practically impossible while keeping scratch arrays small.
DEFAULT_N_CAP = 2048

_DIR_INDEX = {"E": 0, "W": 1, "N": 2, "S": 3}
_MAX_DEPTH = 4096


@dataclass(frozen=True)
class Seed:
    """A growth seed: position plus orientation kind.

    ``kind`` is "H" for east-west growth or "V" for north-south growth.
    """

    x: float
    y: float
    kind: str

    def __post_init__(self):
        if self.kind not in ("H", "V"):
            raise ValueError(f"kind must be 'H' or 'V', got {self.kind!r}")


@dataclass(frozen=True)
class EpisodeRecord:
    """Outcome of one stopping-set episode.

    ``blocking_index`` is n* (math.inf when the episode hit the cap);
    ``squares_created`` is n* + 1, the number of squares grown before
    termination.
    """

    blocking_index: float
    squares_created: float


def _blocked(x0: float, y0: float, d: float, dr: int,
             xs: Sequence[float], ys: Sequence[float],
             kinds: Sequence[bool], depth: int) -> bool:
    """Recursive shading test against plain coordinate lists.

    True iff a ray from (x0, y0) in direction ``dr`` (0=E 1=W 2=N 3=S)
    is blocked within distance ``d``.  A candidate blocker is a seed of
    the perpendicular kind inside the backward triangle 0 <= a <= d,
    |b| <= a of ray coordinates (a along, b across); it blocks exactly
    when its own ray toward the path is itself unblocked over its
    offset |b|.  Ties |b| == a resolve in favour of the blocker.
    """
    if depth <= 0:
        raise RuntimeError(
            "block recursion exceeded the depth cap; the configuration "
            "contains an exact-tie cycle")
    want_h = dr >= 2  # vertical rays are blocked by H seeds, and vice versa
    for j in range(len(xs)):
        if kinds[j] != want_h:
            continue
        xj = xs[j]
        yj = ys[j]
        if dr == 0:
            a = xj - x0
            b = yj - y0
        elif dr == 1:
            a = x0 - xj
            b = yj - y0
        elif dr == 2:
            a = yj - y0
            b = xj - x0
        else:
            a = y0 - yj
            b = xj - x0
        if a < 0.0 or a > d:
            continue
        ab = -b if b < 0.0 else b
        if ab > a:
            continue
        if dr <= 1:
            sub = 3 if yj > y0 else 2
        else:
            sub = 1 if xj > x0 else 0
        if not _blocked(xj, yj, ab, sub, xs, ys, kinds, depth - 1):
            return True
    return False


def block(s_star: Seed, d: float, u: str, seeds: Iterable[Seed]) -> bool:
    """True iff the ray from ``s_star`` in compass direction ``u`` is
    blocked within distance ``d`` by the given seed set.

    The caller must supply every seed that could matter (all seeds of
    the backward triangle of the query and of its recursive
    sub-queries); the function itself never invents or filters seeds
    beyond the triangle rule.
    """
    if d < 0:
        raise ValueError(f"d must be >= 0, got {d}")
    try:
        dr = _DIR_INDEX[u.upper()]
    except (KeyError, AttributeError):
        raise ValueError(f"direction must be one of E/W/N/S, got {u!r}") from None
    xs, ys, kinds = [], [], []
    for s in seeds:
        if s is s_star:
            continue
        xs.append(s.x)
        ys.append(s.y)
        kinds.append(s.kind == "H")
    return _blocked(s_star.x, s_star.y, float(d), dr, xs, ys, kinds, _MAX_DEPTH)


def run_episode(rng_stream, q: float, lam: float = 1.0,
                n_cap: int = DEFAULT_N_CAP) -> EpisodeRecord:
    """One stopping-set episode, drawn step by step from ``rng_stream``.

    This is the readable single-episode reference; ``estimate`` runs the
    same loop through the batch kernels.  Draw order per step: frontier
    side, frontier position, seed kind, then (if the episode continues)
    the next exponential area increment; given the same uniform stream
    the kernels reproduce this function's result bit for bit.

    ``lam`` is accepted for interface symmetry but unused: the blocking
    index is distribution-invariant under rescaling, so episodes run at
    unit intensity.
    """
    del lam
    if n_cap < 1:
        raise ValueError(f"n_cap must be >= 1, got {n_cap}")
    u = rng_stream.random
    xs: list[float] = []
    ys: list[float] = []
    kinds: list[bool] = []
    # Monotone per-(seed, direction) bounds: a ray unblocked at distance
    # d is unblocked at any smaller d, and conversely for blocked.
    free_below: dict[tuple[int, int], float] = {}
    blocked_above: dict[tuple[int, int], float] = {}

    def blk(i: int, d: float, dr: int, depth: int = _MAX_DEPTH) -> bool:
        if depth <= 0:
            raise RuntimeError("block recursion exceeded the depth cap")
        key = (i, dr)
        if d <= free_below.get(key, 0.0):
            return False
        if d >= blocked_above.get(key, math.inf):
            return True
        xi = xs[i]
        yi = ys[i]
        want_h = dr >= 2
        res = False
        for j in range(len(xs)):
            if j == i or kinds[j] != want_h:
                continue
            if dr == 0:
                a = xs[j] - xi
                b = ys[j] - yi
            elif dr == 1:
                a = xi - xs[j]
                b = ys[j] - yi
            elif dr == 2:
                a = ys[j] - yi
                b = xs[j] - xi
            else:
                a = yi - ys[j]
                b = xs[j] - xi
            if a < 0.0 or a > d:
                continue
            ab = -b if b < 0.0 else b
            if ab > a:
                continue
            if dr <= 1:
                sub = 3 if ys[j] > yi else 2
            else:
                sub = 1 if xs[j] > xi else 0
            if not blk(j, ab, sub, depth - 1):
                res = True
                break
        if res:
            if d < blocked_above.get(key, math.inf):
                blocked_above[key] = d
        else:
            if d > free_below.get(key, 0.0):
                free_below[key] = d
        return res

    A = [0.0] * (n_cap + 2)
    A[1] = -math.log(u())
    A[2] = A[1] - math.log(u())
    X = math.inf
    for k in range(1, n_cap + 1):
        Dk = math.sqrt(2.0 * A[k])
        side = u()
        t = u()
        x = 0.5 * Dk * (1.0 + t)
        y = 0.5 * Dk * (1.0 - t)
        if side > 0.5:
            y = -y
        kind_h = u() <= q
        xs.append(x)
        ys.append(y)
        kinds.append(kind_h)
        i = k - 1
        if not kind_h:
            ay = -y if y < 0.0 else y
            dr = 3 if y > 0.0 else 2
            if not blk(i, ay, dr) and x < X:
                X = x
        if 2.0 * X * X < A[k + 1]:
            return EpisodeRecord(blocking_index=k, squares_created=k + 1)
        if k < n_cap:
            A[k + 2] = A[k + 1] - math.log(u())
    return EpisodeRecord(blocking_index=math.inf, squares_created=math.inf)


def _coerce_q(q) -> Fraction:
    # For simulation the binary float actually drawn against *is* the
    # parameter, so floats convert exactly rather than being rejected.
    if isinstance(q, float):
        return Fraction(q)
    return as_fraction(q)


@dataclass(frozen=True, eq=False)
class HHatEstimate:
    """Monte Carlo estimate of the survival probabilities h̄_n.

    ``histogram[k]`` counts episodes with blocking index k for
    k = 1..n_cap; ``histogram[0]`` counts cap hits.  The histogram is a
    sufficient statistic for any per-episode functional of n*, which is
    what makes covariance-correct standard errors possible downstream.
    ``h_hat[n]`` is the exact fraction of episodes with n* > n (cap
    hits count as unblocked).
    """

    q: Fraction
    lam: float
    episodes: int
    n_cap: int
    master_seed: int
    histogram: np.ndarray
    h_hat: tuple[Fraction, ...]
    raw_indices: np.ndarray | None = None

    @property
    def cap_hits(self) -> int:
        return int(self.histogram[0])

    @property
    def per_episode_sums(self) -> np.ndarray:
        """Alias for the blocking-index histogram (the sufficient stats)."""
        return self.histogram

    def survival_weights(self, n_terms: int) -> np.ndarray:
        """Float h̄_0..h̄_{n_terms-1}; requires n_terms <= n_cap + 1."""
        if n_terms > self.n_cap + 1:
            raise ValueError(
                f"only h̄_0..h̄_{self.n_cap} observable with n_cap={self.n_cap}")
        surviving = self.episodes - np.cumsum(self.histogram[1:n_terms])
        out = np.empty(n_terms)
        out[0] = 1.0
        out[1:] = surviving / self.episodes
        return out


def estimate(episodes: int, q, lam: float = 1.0, n_cap: int = DEFAULT_N_CAP,
             master_seed: int = 0, threads: int | None = None,
             n_report: int = 32, record_raw: bool = False) -> HHatEstimate:
    """Estimate h̄_n from ``episodes`` independent episodes.

    Bit-identical output for fixed (master_seed, episodes, q, n_cap)
    regardless of thread count or backend.  ``lam`` is carried as
    metadata only (the episode distribution does not depend on it).
    """
    qf = _coerce_q(q)
    if not (0 <= qf <= 1):
        raise ValueError(f"q must lie in [0, 1], got {qf}")
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    raw = backend.run_episodes(master_seed, episodes, float(qf), n_cap, threads)
    histogram = np.bincount(raw, minlength=n_cap + 1).astype(np.int64)
    blocked_cum = np.cumsum(histogram[1:])
    n_report = min(n_report, n_cap)
    h_hat = (Fraction(1),) + tuple(
        Fraction(int(episodes - blocked_cum[n - 1]), episodes)
        for n in range(1, n_report + 1)
    )
    return HHatEstimate(
        q=qf, lam=lam, episodes=episodes, n_cap=n_cap,
        master_seed=master_seed, histogram=histogram, h_hat=h_hat,
        raw_indices=raw if record_raw else None,
    )


def _series_coefficients(lam: float, n_max: int) -> np.ndarray:
    """c_n = Γ(n+½)/(2 √(2λ) n!) for n = 0..n_max, carried iteratively."""
    c = np.empty(n_max + 1)
    c[0] = 0.5 * math.sqrt(math.pi) / math.sqrt(2.0 * lam)
    for n in range(n_max):
        c[n + 1] = c[n] * (n + 0.5) / (n + 1.0)
    return c


def mean_length(est: HHatEstimate, lam: float) -> tuple[float, float]:
    """Mean ray length E(L) = Σ c_n h̄_n with a covariance-correct s.e.

    The per-episode statistic is g_i = Σ_n c_n·1{n*_i > n} = C(n*_i)
    with C(m) = Σ_{n<m} c_n, so its sample variance automatically
    carries the positive covariance between the h̄_n.  Episodes that hit
    the cap contribute C(n_cap + 1); when any exist the estimate is a
    truncation and a RuntimeWarning flags it.
    """
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    n_cap = est.n_cap
    c = _series_coefficients(lam, n_cap)
    prefix = np.concatenate(([0.0], np.cumsum(c)))  # prefix[m] = C(m)
    vals = np.empty(n_cap + 1)
    vals[0] = prefix[n_cap + 1]
    vals[1:] = prefix[1 : n_cap + 1]
    n = est.episodes
    w = est.histogram.astype(np.float64)
    mean = float(w @ vals) / n
    var = float(w @ (vals - mean) ** 2) / max(n - 1, 1)
    se = math.sqrt(var / n)
    if est.cap_hits:
        warnings.warn(
            f"{est.cap_hits} of {n} episodes hit n_cap={n_cap}; the "
            "series is truncated there and the mean is biased low by "
            f"up to roughly {est.cap_hits / n * c[n_cap] * n_cap:.3g}",
            RuntimeWarning, stacklevel=2)
    return mean, se


def naive_h_hat(n: int, reps: int, q: float, rng) -> Fraction:
    """Direct estimate of h̄_n: drop n uniform seeds in the rotated
    square of diagonal 2 and test the east ray from the west corner over
    half the diagonal.

    This is the quadratic-cost oracle the episode construction is
    checked against.  Seeds draw (p, m) uniform on (0, 2]² with
    x = (p+m)/2, y = (p−m)/2, then the kind; returns the exact fraction
    of repetitions in which the ray was NOT blocked.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    u = rng.random
    xs = [0.0] * n
    ys = [0.0] * n
    kinds = [False] * n
    free = 0
    for _ in range(reps):
        for j in range(n):
            p = 2.0 * u()
            m = 2.0 * u()
            xs[j] = 0.5 * (p + m)
            ys[j] = 0.5 * (p - m)
            kinds[j] = u() <= q
        if not _blocked(0.0, 0.0, 1.0, 0, xs, ys, kinds, _MAX_DEPTH):
            free += 1
    return Fraction(free, reps)


def _poisson_matrix(b: np.ndarray, n_terms: int) -> np.ndarray:
    """Rows of Poisson weights b^n e^{-b}/n!, n = 0..n_terms-1.

    Rows with b > 700 are zeroed (their weights underflow anyway and the
    intermediate cumprod would overflow first).
    """
    b = np.asarray(b, dtype=np.float64)
    safe = b <= 700.0
    bs = np.where(safe, b, 0.0)
    mat = np.ones((len(b), n_terms))
    if n_terms > 1:
        mat[:, 1:] = np.cumprod(np.outer(bs, 1.0 / np.arange(1.0, n_terms)),
                                axis=1)
    mat *= np.exp(-bs)[:, None]
    mat[~safe] = 0.0
    return mat


def _weights_for(est: HHatEstimate, lam: float, ell_max: float) -> np.ndarray:
    b_max = 2.0 * lam * ell_max * ell_max
    n_terms = int(min(est.n_cap + 1, b_max + 12.0 * math.sqrt(b_max + 1.0) + 20))
    return est.survival_weights(max(n_terms, 2))


def ray_survival(est: HHatEstimate, lam: float, ell) -> np.ndarray:
    """Pr(L > ell) = Σ h̄_n b^n e^{-b}/n!, b = 2 λ ell², from estimated h̄."""
    ell = np.atleast_1d(np.asarray(ell, dtype=np.float64))
    h = _weights_for(est, lam, float(ell.max(initial=0.0)))
    b = 2.0 * lam * ell * ell
    return _poisson_matrix(b, len(h)) @ h


def ray_pdf(est: HHatEstimate, lam: float, ell) -> np.ndarray:
    """Ray-length density 4 λ ell Σ (h̄_n − h̄_{n+1}) b^n e^{-b}/n!."""
    ell = np.atleast_1d(np.asarray(ell, dtype=np.float64))
    h = _weights_for(est, lam, float(ell.max(initial=0.0)))
    diffs = h[:-1] - h[1:]
    b = 2.0 * lam * ell * ell
    return 4.0 * lam * ell * (_poisson_matrix(b, len(diffs)) @ diffs)


def line_length_distribution(est: HHatEstimate, lam: float,
                             grid: np.ndarray) -> np.ndarray:
    """Density of the total line length (two independent opposite rays).

    Self-convolves the ray density on a uniform grid starting at 0 and
    returns a (length, density) table on that same grid.  The grid must
    extend far enough that the ray density is negligible beyond half the
    grid end, or the tail of the table is an undercount.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or len(grid) < 2:
        raise ValueError("grid must be a 1-D array with at least 2 points")
    dx = grid[1] - grid[0]
    if grid[0] != 0.0 or dx <= 0 or not np.allclose(np.diff(grid), dx,
                                                    rtol=1e-9, atol=0.0):
        raise ValueError("grid must be uniform and start at 0")
    f = ray_pdf(est, lam, grid)
    conv = np.convolve(f, f)[: len(grid)] * dx
    return np.column_stack([grid, conv])


def distribution_table(est: HHatEstimate, lam: float, grid) -> tuple[
        np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(pdf, pdf_se, cdf, cdf_se) on a grid, with covariance-correct errors.

    Both curves are means of per-episode statistics — survival at ell is
    Σ_{n<n*} w_n(ell) and the density is 4λ·ell·w_{n*−1}(ell), with
    w_n(ell) the Poisson weights at b = 2λell² — so their sample
    variances over the blocking-index histogram give standard errors
    that carry the full covariance of the estimated h̄_n.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=np.float64))
    b = 2.0 * lam * grid * grid
    b_max = float(b.max(initial=0.0))
    n_terms = int(min(est.n_cap + 1,
                      b_max + 12.0 * math.sqrt(b_max + 1.0) + 20))
    n_terms = max(n_terms, 2)
    pois = _poisson_matrix(b, n_terms)
    prefix = np.cumsum(pois, axis=1)  # prefix[:, m] = Σ_{n<=m} w_n
    hist = est.histogram
    n = est.episodes
    # episodes with n* = k carry survival statistic prefix[:, k-1]; all
    # k > n_terms (and cap hits) collapse onto the last column, whose
    # missing tail weight is below the _poisson_matrix truncation.
    cnt = np.zeros(n_terms, dtype=np.float64)
    upto = min(n_terms, est.n_cap)
    cnt[:upto] = hist[1 : upto + 1]
    # density statistic: only episodes with n* = m+1 <= n_terms hit
    # column m; later blocks (and caps) contribute zero weight.
    cnt_pdf = cnt.copy()
    cnt[n_terms - 1] += n - cnt.sum()
    mean_s = (prefix @ cnt) / n
    mean_s2 = ((prefix * prefix) @ cnt) / n
    cdf_se = np.sqrt(np.maximum(mean_s2 - mean_s**2, 0.0) / max(n - 1, 1))
    scale = 4.0 * lam * grid
    pdf = scale * ((pois @ cnt_pdf) / n)
    pdf_m2 = scale**2 * (((pois * pois) @ cnt_pdf) / n)
    pdf_se = np.sqrt(np.maximum(pdf_m2 - pdf**2, 0.0) / max(n - 1, 1))
    return pdf, pdf_se, 1.0 - mean_s, cdf_se


@dataclass(frozen=True)
class TaylorRow:
    """One power of the small-ell survival expansion in both models."""

    power: int
    half_model: Fraction
    full_model: Fraction

    @property
    def equal(self) -> bool:
        return self.half_model == self.full_model


def taylor_check() -> tuple[TaylorRow, ...]:
    """Survival Taylor coefficients through ell^6, half vs full model.

    Compared at matched leading order — half model at λ = 2 (Poisson
    argument ell²) against the full model at λ = 1 (argument 2 ell²) —
    the expansions share 1 − ½ell² + ⅙ell⁴ and then split at ell⁶:
    −31/720 (half) versus −32/720 (full).  Both are exact rationals
    built from the exact coefficient vectors.
    """
    half_h = compute_h(Fraction(1, 2), 3).values
    half = survival_taylor_coefficients(half_h, Fraction(1), 3)
    full = survival_taylor_coefficients(EXACT_HBAR, Fraction(2), 3)
    return tuple(
        TaylorRow(power=2 * m, half_model=half[m], full_model=full[m])
        for m in range(4)
    )
