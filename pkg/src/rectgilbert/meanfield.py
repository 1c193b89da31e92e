"""Mean-field approximations to the ray-length distributions.

The mean-field picture treats growing ray ends as uniformly spread, so
the expected length density R(t) of east rays and its south counterpart
obey the coupled ODEs

    R_east'' = -R_south * R_east',     R_south'' = -R_east * R_south',

with R(0) = 0, R_east'(0) = Q, R_south'(0) = P, where (Q, P) are the
scaled intensities of east/south growing ends: (2 q lambda,
2 (1-q) lambda) for the full model and (q lambda, (1-q) lambda) for the
half model.  At q = 1/2 the system closes to sech^2 survival laws; for
general q the solution is generated as a power series with coefficients
that are exact polynomials in (P, Q).

The normalized survival function is G(ell)/G(0) with G = R'.  R itself is
obtained by integrating G; at q = 1/2 this gives R(t) =
(Q/kappa) tanh(kappa t) with kappa = sqrt(lambda/2) for the full model
and sqrt(lambda/4) for the half model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

from .specfun import integrate

__all__ = [
    "MeanFieldSeries",
    "MeanFieldSeriesError",
    "series_coefficients",
    "model_intensities",
    "survival",
    "meanfield_pdf",
    "meanfield_mean",
    "growth_density",
    "ray_density",
]

# A coefficient is a polynomial in (P, Q): {(i, j): c} means c * P^i Q^j.
Poly = dict[tuple[int, int], Fraction]
Rational = Union[Fraction, int, str]


class MeanFieldSeriesError(RuntimeError):
    """Series evaluation outside its trusted radius, or truncation-dominated."""


def _poly_scaled_mul(a: Poly, b: Poly, scale: Fraction) -> Poly:
    out: Poly = {}
    for (i1, j1), c1 in a.items():
        for (i2, j2), c2 in b.items():
            key = (i1 + i2, j1 + j2)
            out[key] = out.get(key, Fraction(0)) + scale * c1 * c2
    return {k: v for k, v in out.items() if v != 0}


def _poly_add_scaled(dst: Poly, src: Poly, scale: Fraction) -> None:
    for k, c in src.items():
        v = dst.get(k, Fraction(0)) + scale * c
        if v == 0:
            dst.pop(k, None)
        else:
            dst[k] = v


@lru_cache(maxsize=8)
def _raw_series(n_max: int) -> tuple[tuple[Poly, ...], tuple[Poly, ...]]:
    """Symbolic coefficients a_k (east) and b_k (south) through order n_max."""
    a: list[Poly] = [dict() for _ in range(n_max + 1)]
    b: list[Poly] = [dict() for _ in range(n_max + 1)]
    if n_max >= 1:
        a[1] = {(0, 1): Fraction(1)}  # Q
        b[1] = {(1, 0): Fraction(1)}  # P
    for k in range(0, n_max - 1):
        # coefficient of t^k in -R_south * R_east' gives (k+2)(k+1) a_{k+2}
        acc_a: Poly = {}
        acc_b: Poly = {}
        for i in range(k + 1):
            jj = k - i
            if b[i]:
                _poly_add_scaled(
                    acc_a, _poly_scaled_mul(b[i], a[jj + 1], Fraction(jj + 1)), Fraction(-1)
                )
            if a[i]:
                _poly_add_scaled(
                    acc_b, _poly_scaled_mul(a[i], b[jj + 1], Fraction(jj + 1)), Fraction(-1)
                )
        denom = Fraction((k + 1) * (k + 2))
        a[k + 2] = {key: c / denom for key, c in acc_a.items()}
        b[k + 2] = {key: c / denom for key, c in acc_b.items()}
    return tuple(a), tuple(b)


def _poly_eval(p: Poly, P, Q):
    total = 0
    for (i, j), c in p.items():
        total = total + c * P**i * Q**j
    return total


@dataclass(frozen=True)
class MeanFieldSeries:
    """Odd-power series of R_east(t) with exact polynomial coefficients.

    ``coeffs[m]`` is the polynomial coefficient of t^{2m+1}.  Numeric (or
    exact, if P and Q are exact) values come from ``numeric_coefficients``.
    """

    P: object
    Q: object
    n_max: int
    coeffs: tuple[Poly, ...]

    def numeric_coefficients(self):
        return tuple(_poly_eval(c, self.P, self.Q) for c in self.coeffs)

    def swapped(self) -> "MeanFieldSeries":
        """The series for R_south; the ODE system is symmetric under P <-> Q."""
        sw = tuple({(j, i): c for (i, j), c in poly.items()} for poly in self.coeffs)
        return MeanFieldSeries(P=self.Q, Q=self.P, n_max=self.n_max, coeffs=sw)


def series_coefficients(P, Q, n_max: int) -> MeanFieldSeries:
    """Generate the R_east power series through order t^{n_max}.

    P and Q may be exact rationals (recommended: Fraction/int/str) or
    floats; with exact inputs the returned coefficients evaluate exactly.
    """
    if isinstance(P, str):
        P = Fraction(P)
    if isinstance(Q, str):
        Q = Fraction(Q)
    if not (P >= 0 and Q >= 0):
        raise ValueError("P and Q must be nonnegative")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    a, _ = _raw_series(int(n_max))
    odd = tuple(a[k] for k in range(1, n_max + 1, 2))
    return MeanFieldSeries(P=P, Q=Q, n_max=int(n_max), coeffs=odd)


def model_intensities(q, lam, model: str):
    """(P, Q) for a model: P scales south-growing ends, Q east-growing."""
    if model == "full":
        return 2 * (1 - Fraction(q)) * lam, 2 * Fraction(q) * lam
    if model == "half":
        return (1 - Fraction(q)) * lam, Fraction(q) * lam
    raise ValueError(f"model must be 'full' or 'half', got {model!r}")


def _is_half_q(q) -> bool:
    return Fraction(q) == Fraction(1, 2)


def _kappa(lam: float, model: str) -> float:
    return math.sqrt(lam / 2.0) if model == "full" else math.sqrt(lam / 4.0)


_SERIES_ORDER = 81
_TRUNC_TOL = 1e-6


def _g_series_eval(q, lam: float, ell: float, model: str, derivative: bool):
    """Evaluate G = R' (or -G') normalized by G(0) = Q from the series."""
    P, Q = model_intensities(q, lam, model)
    ms = series_coefficients(float(P), float(Q), _SERIES_ORDER)
    g = [
        (2 * m + 1) * c for m, c in enumerate(ms.numeric_coefficients())
    ]  # G(t) = sum g[m] t^{2m}
    # Empirical convergence radius from the coefficient ratio test.
    ratios = [
        abs(g[m - 1] / g[m]) for m in range(len(g) - 4, len(g)) if g[m] != 0
    ]
    radius = math.sqrt(min(ratios)) if ratios else math.inf
    if ell >= 0.95 * radius:
        raise MeanFieldSeriesError(
            f"ell={ell} is outside the trusted series radius ~{radius:.3f} "
            f"(q={q}, lam={lam}, {model} model)"
        )
    t2 = ell * ell
    if derivative:
        val = sum(2 * m * g[m] * ell * t2 ** (m - 1) for m in range(1, len(g)))
        last = abs(2 * (len(g) - 1) * g[-1] * ell * t2 ** (len(g) - 2))
    else:
        val = 0.0
        for m in range(len(g) - 1, -1, -1):
            val = val * t2 + g[m]
        last = abs(g[-1] * t2 ** (len(g) - 1))
    if last > _TRUNC_TOL * abs(g[0]):
        raise MeanFieldSeriesError(
            f"series truncation estimate {last:.2e} exceeds tolerance at ell={ell}"
        )
    return val / g[0]


def survival(q, lam: float, ell: float, model: str) -> float:
    """Mean-field Pr(L > ell) = G(ell)/G(0).

    q = 1/2 uses the closed form sech^2(kappa ell) with kappa =
    sqrt(lambda/2) (full) or sqrt(lambda/4) (half); other q evaluate the
    power series inside its empirical convergence radius and raise
    ``MeanFieldSeriesError`` beyond it.
    """
    if ell < 0:
        raise ValueError(f"ell must be >= 0, got {ell}")
    if model not in ("full", "half"):
        raise ValueError(f"model must be 'full' or 'half', got {model!r}")
    if _is_half_q(q):
        s = 1.0 / math.cosh(_kappa(lam, model) * ell)
        return s * s
    return _g_series_eval(q, lam, ell, model, derivative=False)


def meanfield_pdf(q, lam: float, ell: float, model: str) -> float:
    """-d/d ell of the mean-field survival function."""
    if ell < 0:
        raise ValueError(f"ell must be >= 0, got {ell}")
    if model not in ("full", "half"):
        raise ValueError(f"model must be 'full' or 'half', got {model!r}")
    if _is_half_q(q):
        k = _kappa(lam, model)
        sech = 1.0 / math.cosh(k * ell)
        return 2.0 * k * sech * sech * math.tanh(k * ell)
    return -_g_series_eval(q, lam, ell, model, derivative=True)


def meanfield_mean(q, lam: float, model: str) -> float:
    """Mean of the mean-field law, by quadrature of the survival function."""
    if not _is_half_q(q):
        raise MeanFieldSeriesError(
            "the series diverges past its radius; the mean-field mean is only "
            "evaluated at q = 1/2 where the closed form holds"
        )
    return integrate(lambda t: survival(q, lam, t, model), 0.0, math.inf, tol=1e-10)


def growth_density(q, lam: float, t: float, model: str) -> float:
    """Density of growing east-ray ends G(t); closed form at q = 1/2."""
    if _is_half_q(q):
        g0 = float(model_intensities(q, lam, model)[1])
        return g0 * survival(q, lam, t, model)
    P, Q = model_intensities(q, lam, model)
    return float(Q) * _g_series_eval(q, lam, t, model, derivative=False)


def ray_density(q, lam: float, t: float, model: str) -> float:
    """Expected-length density R(t) = int_0^t G, by quadrature of G."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0.0:
        return 0.0
    return integrate(lambda s: growth_density(q, lam, s, model), 0.0, t, tol=1e-10)
