"""Trapezoid-walk sampler for the half rectangular Gilbert model.

The half-model ray length admits an exact sequential sampler: the
stopping set of the next potential blocker is a trapezoid whose area is
Exp(λ) distributed, so its base length r follows from inverting
r·y + r²/2 = E/λ given the current left-boundary height y.  With
probability 1−q the seed is V-type and terminates the ray after a
distance r; otherwise the trapezoid's dead zone is discarded outright —
no seed inside it can influence the ray — and the walk continues from a
fresh boundary height drawn uniformly on (0, r+y).

Each sample consumes a geometric number of steps with success
probability 1−q, so the cost per draw is O(1/(1−q)) with no spatial
bookkeeping at all.  Like the full-model episodes, sample i draws from
an RNG stream derived from (master_seed, i), making every report
deterministic and thread-count invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import backend
from .fullsim import _coerce_q

__all__ = [
    "TrapezoidState",
    "HalfModelReport",
    "step",
    "sample_ray_length",
    "monte_carlo_report",
]


@dataclass(frozen=True)
class TrapezoidState:
    """Walk state: current left-boundary height and distance covered."""

    y: float = 0.0
    x_total: float = 0.0

    def __post_init__(self):
        if self.y < 0 or self.x_total < 0:
            raise ValueError(f"state components must be >= 0, got {self}")


def step(state: TrapezoidState, q: float, lam: float, rng):
    """Advance the walk by one stopping-set trapezoid.

    Returns ``(terminal_length, "V")`` when the stopping seed is V-type
    (the ray ends there) and ``(next_state, "H")`` otherwise.  Draw
    order — area increment, seed kind, then the new boundary height only
    on continuation — matches the batch kernel, which reproduces this
    function bit for bit on the same uniform stream.

    The base length uses the cancellation-free root
    r = c / (y + sqrt(y² + c)), c = 2E/λ, of r·y + r²/2 = E/λ.
    """
    e = -math.log(rng.random())
    c = 2.0 * e / lam
    y = state.y
    r = 0.0 if c == 0.0 else c / (y + math.sqrt(y * y + c))
    x = state.x_total + r
    if rng.random() <= 1.0 - q:
        return x, "V"
    return TrapezoidState(y=rng.random() * (r + y), x_total=x), "H"


def sample_ray_length(q: float, lam: float, rng) -> float:
    """One exact draw of the half-model ray length L.

    Requires 0 <= q < 1; at q = 1 every seed continues the walk and the
    ray never terminates.
    """
    if not 0.0 <= q < 1.0:
        raise ValueError(f"q must lie in [0, 1), got {q}")
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    state = TrapezoidState()
    while True:
        nxt, kind = step(state, q, lam, rng)
        if kind == "V":
            return nxt
        state = nxt


@dataclass(frozen=True, eq=False)
class HalfModelReport:
    """Moment and survival estimates from one batch of exact samples."""

    q: Fraction
    lam: float
    samples: int
    master_seed: int
    mean: float
    mean_se: float
    second_moment: float
    second_moment_se: float
    mean_steps: float
    mean_steps_se: float
    survival_grid: np.ndarray | None = None
    survival: np.ndarray | None = None
    survival_se: np.ndarray | None = None
    lengths: np.ndarray | None = None
    steps: np.ndarray | None = None


def monte_carlo_report(q, lam: float, samples: int, master_seed: int = 0,
                       survival_grid=None, threads: int | None = None,
                       return_samples: bool = False) -> HalfModelReport:
    """Sample ``samples`` ray lengths and summarize them.

    Deterministic for fixed (master_seed, samples, q, lam) regardless of
    thread count.  ``survival_grid``, when given, adds the empirical
    survival curve Pr(L > g) with binomial standard errors.  With
    ``return_samples`` the raw length and step arrays ride along (for
    dumps and distribution tests).
    """
    qf = _coerce_q(q)
    if not (0 <= qf < 1):
        raise ValueError(f"q must lie in [0, 1), got {qf}")
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    lengths, steps = backend.run_half_samples(master_seed, samples,
                                              float(qf), lam, threads)
    n = samples

    def _mean_se(arr):
        m = float(np.mean(arr))
        se = float(np.std(arr, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
        return m, se

    mean, mean_se = _mean_se(lengths)
    second, second_se = _mean_se(lengths * lengths)
    msteps, msteps_se = _mean_se(steps.astype(np.float64))

    grid = surv = surv_se = None
    if survival_grid is not None:
        grid = np.asarray(survival_grid, dtype=np.float64)
        exceed = n - np.searchsorted(np.sort(lengths), grid, side="right")
        surv = exceed / n
        surv_se = np.sqrt(surv * (1.0 - surv) / n)

    return HalfModelReport(
        q=qf, lam=lam, samples=samples, master_seed=master_seed,
        mean=mean, mean_se=mean_se,
        second_moment=second, second_moment_se=second_se,
        mean_steps=msteps, mean_steps_se=msteps_se,
        survival_grid=grid, survival=surv, survival_se=surv_se,
        lengths=lengths if return_samples else None,
        steps=steps if return_samples else None,
    )
