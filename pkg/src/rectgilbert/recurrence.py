"""Exact ray-length distribution series for the half model.

The survival probability of an east-growing test ray decomposes over
the number of seeds in a triangular stopping set,

    Pr(L > ell) = sum_n h_n * a^n e^{-a} / n!,    a = lambda*ell^2/2,

where ``h_n`` is the probability that none of ``n`` uniform seeds in the
triangle sends a blocking ray across the test segment.  The ``h_n``
satisfy a double-sum recurrence with rational coefficients; this module
computes them exactly and evaluates the CDF, pdf and moment series with
explicit truncation-tail reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

try:
    from gmpy2 import lcm as _lcm
    from gmpy2 import mpq as _mpq
    from gmpy2 import mpz as _mpz

    _HAVE_GMPY2 = True
except ImportError:  # pragma: no cover - exercised only without gmpy2
    _mpq = Fraction
    _mpz = int
    _lcm = math.lcm
    _HAVE_GMPY2 = False

__all__ = [
    "HCoefficients",
    "SeriesEvalConfig",
    "SeriesResult",
    "compute_h",
    "cdf",
    "pdf",
    "mean_series",
    "second_moment_series",
    "survival_taylor_coefficients",
    "as_fraction",
]


def as_fraction(q) -> Fraction:
    """Coerce an exact rational input; floats are rejected.

    Floats are refused because values like 0.1 are not the rationals
    they print as, and every published constant here is exact.  The only
    exception is a float that is exactly representable and dyadic-safe
    anyway (0.5, 0.25, ...) -- still rejected, for uniformity.
    """
    if isinstance(q, float):
        raise TypeError(
            "q must be an exact rational (Fraction, int or 'p/q' string), not float"
        )
    return Fraction(q)


@dataclass(frozen=True)
class HCoefficients:
    """Exact coefficients h_0..h_N for seed-type proportion ``q``."""

    q: Fraction
    values: tuple[Fraction, ...]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SeriesEvalConfig:
    """Evaluation parameters: seed intensity and truncation order."""

    lam: float
    n_terms: int

    def __post_init__(self):
        if not (self.lam > 0):
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.n_terms < 1:
            raise ValueError(f"n_terms must be >= 1, got {self.n_terms}")


@dataclass(frozen=True)
class SeriesResult:
    """A truncated-series value together with its tail bound.

    ``converged`` is False when the reported tail bound exceeds the
    trust threshold of the operation (or when the series is genuinely
    divergent, e.g. the mean at q=1).
    """

    value: float
    tail_bound: float
    converged: bool = True

    def __float__(self) -> float:
        return self.value


@lru_cache(maxsize=16)
def _compute_h_cached(q: Fraction, n_max: int) -> HCoefficients:
    qn = _mpz(q.numerator)
    qd = _mpz(q.denominator)
    # h_u held as separate numerator/denominator arrays so the double sum
    # below can run in pure integers.
    num = [_mpz(1), qn]
    den = [_mpz(1), qd]

    # Integer tables; factorials up to (2 n_max)! get huge, which is the
    # point of doing this in exact arithmetic.
    nfac = 2 * n_max if n_max >= 1 else 2
    fac = [_mpz(1)] * (nfac + 1)
    for i in range(1, nfac + 1):
        fac[i] = fac[i - 1] * i
    pow2 = [_mpz(1) << i for i in range(n_max + 1)]

    lcm_den = _lcm(den[0], den[1])
    for n in range(2, n_max + 1):
        # Scale each h_u onto the running common denominator: one rational
        # reduction per n instead of one per (u, v) term.  The factorial
        # quotient is an exact integer (two binomials times a falling
        # factorial), and the summand is symmetric under u <-> v, so only
        # u <= v is visited with off-diagonal terms doubled.
        w = [num[u] * (lcm_den // den[u]) for u in range(n)]
        n1 = n - 1
        total = _mpz(0)
        for u in range(n):
            wu = w[u]
            if not wu:
                continue
            fu = fac[u]
            for v in range(u, n - u):
                wv = w[v]
                if not wv:
                    continue
                t = wu * wv * (
                    (pow2[n - u - v] * fac[n1 + u - v] * fac[n1 - u + v])
                    // (fu * fac[v] * fac[n1 - u - v])
                )
                total += t if u == v else 2 * t
        hn = _mpq(qn * total * fac[n], qd * lcm_den * lcm_den * fac[2 * n])
        num.append(_mpz(hn.numerator))
        den.append(_mpz(hn.denominator))
        lcm_den = _lcm(lcm_den, den[-1])

    values = tuple(
        Fraction(int(a), int(b)) for a, b in zip(num[: n_max + 1], den[: n_max + 1])
    )
    return HCoefficients(q=q, values=values)


def compute_h(q, n_max: int) -> HCoefficients:
    """Exact h_0..h_{n_max} by the double-sum recurrence.

    All arithmetic is exact rational; no floating point enters until a
    series is evaluated.  Requires 0 <= q <= 1 and n_max >= 0.
    """
    qf = as_fraction(q)
    if not (0 <= qf <= 1):
        raise ValueError(f"q must lie in [0, 1], got {qf}")
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    return _compute_h_cached(qf, int(n_max))


def _poisson_weights(a: float, n: int):
    """Weights a^k e^{-a}/k! for k < n, plus the Poisson tail P(X >= n).

    Switches to log-space accumulation for large ``a`` where e^{-a}
    underflows; individual weights may then underflow to 0, which only
    makes the reported tail larger (conservative).
    """
    w = [0.0] * n
    if a <= 700.0:
        t = math.exp(-a)
        acc = 0.0
        for k in range(n):
            w[k] = t
            acc += t
            t *= a / (k + 1)
    else:
        acc = 0.0
        la = math.log(a)
        for k in range(n):
            lw = -a + k * la - math.lgamma(k + 1)
            w[k] = math.exp(lw) if lw > -745.0 else 0.0
            acc += w[k]
    tail = 1.0 - acc
    return w, max(tail, 0.0)


_TAIL_TRUST = 1e-12


def cdf(h: HCoefficients, cfg: SeriesEvalConfig, ell: float) -> SeriesResult:
    """Ray-length CDF 1 - sum_n h_n a^n e^{-a}/n!, a = lam*ell^2/2."""
    if ell < 0:
        raise ValueError(f"ell must be >= 0, got {ell}")
    n = cfg.n_terms
    if len(h) < n:
        raise ValueError(f"need {n} coefficients, have {len(h)}")
    a = 0.5 * cfg.lam * ell * ell
    w, tail = _poisson_weights(a, n)
    surv = 0.0
    for k in range(n):
        surv += float(h.values[k]) * w[k]
    value = min(max(1.0 - surv, 0.0), 1.0)
    # 0 < h_n <= 1, so the omitted terms are bounded by the Poisson tail.
    return SeriesResult(value=value, tail_bound=tail, converged=tail <= _TAIL_TRUST)


def pdf(h: HCoefficients, cfg: SeriesEvalConfig, ell: float) -> SeriesResult:
    """Term-by-term derivative of the CDF series.

    F'(ell) = lam*ell * sum_n (h_n - h_{n+1}) a^n e^{-a}/n!; the sum uses
    the first n_terms - 1 coefficient differences.
    """
    if ell < 0:
        raise ValueError(f"ell must be >= 0, got {ell}")
    n = cfg.n_terms
    if len(h) < n:
        raise ValueError(f"need {n} coefficients, have {len(h)}")
    a = 0.5 * cfg.lam * ell * ell
    w, tail = _poisson_weights(a, max(n - 1, 1))
    s = 0.0
    for k in range(n - 1):
        s += float(h.values[k] - h.values[k + 1]) * w[k]
    value = cfg.lam * ell * s
    bound = cfg.lam * ell * tail  # |h_n - h_{n+1}| <= 1
    return SeriesResult(value=value, tail_bound=bound, converged=bound <= 1e-9)


def _tail_ratio(values: Sequence[Fraction]) -> float:
    """Estimated geometric decay ratio of the last few coefficients.

    Returns inf when the coefficients are not decaying (divergent
    evaluation), 0.0 when they have terminated at exact zero.
    """
    tail = values[-6:]
    ratios = []
    for a, b in zip(tail, tail[1:]):
        if a != 0:
            ratios.append(float(b / a))
    if not ratios:
        return 0.0
    r = max(ratios)
    if r >= 1.0 - 0.5 / max(len(values), 2):
        return math.inf
    return max(r, 0.0)


def mean_series(h: HCoefficients, cfg: SeriesEvalConfig) -> SeriesResult:
    """E(L) = (1/sqrt(2 lam)) sum_n h_n Gamma(n+1/2)/n!.

    The Gamma/factorial ratio is carried iteratively (c_{n+1} =
    c_n (n+1/2)/(n+1)) so the sum never overflows.  The tail bound is a
    geometric estimate from the observed coefficient decay; a
    non-decaying tail (e.g. q=1, where no ray is ever blocked) is
    reported as non-convergent.
    """
    n = cfg.n_terms
    if len(h) < n:
        raise ValueError(f"need {n} coefficients, have {len(h)}")
    pref = 1.0 / math.sqrt(2.0 * cfg.lam)
    c = math.sqrt(math.pi)  # Gamma(1/2)
    total = 0.0
    last_term = 0.0
    for k in range(n):
        last_term = float(h.values[k]) * c
        total += last_term
        c *= (k + 0.5) / (k + 1.0)
    r = _tail_ratio(h.values[:n])
    if math.isinf(r):
        return SeriesResult(value=pref * total, tail_bound=math.inf, converged=False)
    bound = pref * last_term * (r / (1.0 - r)) if r > 0 else 0.0
    return SeriesResult(value=pref * total, tail_bound=bound, converged=True)


def second_moment_series(h: HCoefficients, cfg: SeriesEvalConfig) -> SeriesResult:
    """E(L^2) = (2/lam) sum_n h_n.

    Follows from E(L^2) = int 2 ell Pr(L > ell) d ell: each survival term
    integrates to h_n/(lam) * 1, summing to (2/lam) * sum h_n... verified
    against direct quadrature of 2*ell*(1-F) in the test suite.
    """
    n = cfg.n_terms
    if len(h) < n:
        raise ValueError(f"need {n} coefficients, have {len(h)}")
    total = 0.0
    for k in range(n):
        total += float(h.values[k])
    pref = 2.0 / cfg.lam
    r = _tail_ratio(h.values[:n])
    if math.isinf(r):
        return SeriesResult(value=pref * total, tail_bound=math.inf, converged=False)
    last = float(h.values[n - 1])
    bound = pref * last * (r / (1.0 - r)) if r > 0 else 0.0
    return SeriesResult(value=pref * total, tail_bound=bound, converged=True)


def survival_taylor_coefficients(
    values: Sequence[Fraction], scale: Fraction, order: int
) -> list[Fraction]:
    """Exact Taylor coefficients of a survival series about ell = 0.

    For Pr(L > ell) = sum_n c_n (s ell^2)^n e^{-s ell^2}/n! with exact
    coefficients ``values`` and exact scale ``s``, the coefficient of
    ell^{2m} is s^m * sum_{n<=m} c_n (-1)^{m-n} / (n! (m-n)!).  Returns
    coefficients for powers ell^0, ell^2, ..., ell^{2*order}.
    """
    s = Fraction(scale)
    if len(values) < order + 1:
        raise ValueError(f"need {order + 1} coefficients, have {len(values)}")
    out = []
    for m in range(order + 1):
        acc = Fraction(0)
        for n in range(m + 1):
            term = Fraction(values[n]) * (-1) ** (m - n)
            acc += term / (math.factorial(n) * math.factorial(m - n))
        out.append(acc * s**m)
    return out
