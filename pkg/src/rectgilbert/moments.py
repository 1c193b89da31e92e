"""Exact half-model moments and the general-q integral-equation solver.

At q = 1/2 the conditional mean of the remaining ray length given the
live-zone boundary height y satisfies a confluent hypergeometric ODE,
giving

    mu1(y) = B * U(1/4, 1/2, lambda y^2 / 2),   B = sqrt(pi)/(sqrt(lambda) Gamma(3/4)),

and E(L) = mu1(0) = pi / (sqrt(lambda) Gamma(3/4)^2).  The second moment
solves the same homogeneous equation with forcing -2 mu1'; it is built
here by variation of parameters from the regular/decaying pair
f1 = M(1/4,1/2,z^2), f2 = U(1/4,1/2,z^2) (z = sqrt(lambda/2) y), their
Wronskian W(z) = -(2 sqrt(pi)/Gamma(1/4)) e^{z^2}, and the kernel
G(z,t) = (f2(z) f1(t) - f1(z) f2(t)) / W(t).  The constant K that fixes
the homogeneous amplitude is recomputed by nested quadrature every time
(cached per process), never hard-coded.

For general q no closed form is attempted; the conditional-mean integral
equation is solved by fixed-point iteration on a graded grid, with the
half-model Monte Carlo sampler as the independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .specfun import DEFAULT_CONFIG, integrate, kummer_m, kummer_u

__all__ = [
    "MomentReport",
    "ConvergenceError",
    "mu1",
    "mu2",
    "expected_length_exact",
    "second_moment_exact",
    "second_moment_detail",
    "general_q_mean",
    "moment_report",
    "wronskian",
    "wronskian_from_identities",
]

_GAMMA14 = math.gamma(0.25)
_GAMMA34 = math.gamma(0.75)
_SQRTPI = math.sqrt(math.pi)


class ConvergenceError(RuntimeError):
    """The fixed-point solver failed to reach its tolerance."""


@dataclass(frozen=True)
class MomentReport:
    lam: float
    q: Fraction
    mean: float
    second_moment: float | None
    method: str  # "closed_form" | "integral_equation"
    numeric_diagnostics: dict = field(default_factory=dict)


def _check_lam(lam: float):
    if not (lam > 0):
        raise ValueError(f"lam must be positive, got {lam}")


def mu1(y: float, lam: float) -> float:
    """Conditional mean remaining length at boundary height y (q=1/2)."""
    _check_lam(lam)
    if y < 0:
        raise ValueError(f"y must be >= 0, got {y}")
    B = _SQRTPI / (math.sqrt(lam) * _GAMMA34)
    return B * kummer_u(0.25, 0.5, 0.5 * lam * y * y)


def expected_length_exact(lam: float) -> float:
    """E(L) = pi / (sqrt(lambda) Gamma(3/4)^2) at q = 1/2."""
    _check_lam(lam)
    return math.pi / (math.sqrt(lam) * _GAMMA34 * _GAMMA34)


def wronskian(z: float) -> float:
    """Wronskian f1 f2' - f2 f1' of the homogeneous pair, closed form."""
    return -(2.0 * _SQRTPI / _GAMMA14) * math.exp(z * z)


def wronskian_from_identities(z: float) -> float:
    """Same Wronskian assembled from the M'/U' derivative identities.

    f1'(z) = z M(5/4,3/2,z^2) and f2'(z) = -(z/2) U(5/4,3/2,z^2); used by
    the test suite to pin the closed form above.  Requires z > 0 (the
    chain rule form is 0*inf at z = 0).
    """
    if z <= 0:
        raise ValueError("identity form needs z > 0")
    z2 = z * z
    f1 = kummer_m(0.25, 0.5, z2)
    f2 = kummer_u(0.25, 0.5, z2)
    m_up = kummer_m(1.25, 1.5, z2)
    u_up = kummer_u(1.25, 1.5, z2)
    return -0.5 * z * (f1 * u_up + 2.0 * f2 * m_up)


def _f1(z: float) -> float:
    return kummer_m(0.25, 0.5, z * z)


def _f2(z: float) -> float:
    return kummer_u(0.25, 0.5, z * z)


def _integrand_f1_part(t: float) -> float:
    # (f1 / W) * forcing-weight t U(5/4,3/2,t^2); decays only like t^-2,
    # handled by the asymptotic tail below.
    return (_f1(t) / wronskian(t)) * t * kummer_u(1.25, 1.5, t * t)


def _integrand_f2_part(t: float) -> float:
    return (_f2(t) / wronskian(t)) * t * kummer_u(1.25, 1.5, t * t)


def _poch_series(p1: float, p2: float, sign: float, kmax: int) -> list[float]:
    c = [1.0]
    for k in range(kmax):
        c.append(c[-1] * (p1 + k) * (p2 + k) * sign / (k + 1.0))
    return c


def _tail_f1_part(T: float, kmax: int = 24) -> tuple[float, float]:
    """int_T^inf of the f1-part integrand from its asymptotic expansion.

    The integrand behaves as -(1/2) t^{-2} sum_m e_m t^{-2m} where e_m is
    the Cauchy product of the M and U asymptotic series coefficients.
    The (divergent) series is summed to its smallest term.
    """
    cm = _poch_series(0.75, 0.25, +1.0, kmax)
    cu = _poch_series(1.25, 0.75, -1.0, kmax)
    e = [sum(cm[i] * cu[m - i] for i in range(m + 1)) for m in range(kmax + 1)]
    total = 0.0
    prev = math.inf
    for m in range(kmax + 1):
        term = -0.5 * e[m] * T ** (-(1.0 + 2.0 * m)) / (1.0 + 2.0 * m)
        if abs(term) >= prev:
            return total, abs(term)
        total += term
        prev = abs(term)
    return total, prev


def _I(z: float) -> float:
    """The particular-integral kernel integral int_z^inf G(z,t) g(t) dt

    split into its f1 and f2 projections; the slowly decaying f1 part is
    integrated to a finite horizon plus its asymptotic tail.
    """
    T = max(13.0, z + 1.0)
    a1 = integrate(_integrand_f1_part, z, T, tol=1e-11)
    a2 = integrate(_integrand_f2_part, z, min(T, z + 9.0), tol=1e-11)
    jt, _ = _tail_f1_part(T)
    return _f2(z) * (a1 + jt) - _f1(z) * a2


def _fp_unit(z: float) -> float:
    """Particular integral f_p in the scaled variable z (lambda = 1)."""
    return -(math.sqrt(2.0 * math.pi) / _GAMMA34) * _I(z)


@lru_cache(maxsize=1)
def _unit_second_moment() -> dict:
    """K, f_p(0), the homogeneous amplitude and E(L^2) at lambda = 1."""
    # erfc(7) ~ 4e-23: the outer integrand is numerically zero past 7.
    K = -integrate(lambda z: math.erfc(z) * _I(z), 0.0, 7.0, tol=1e-9)
    fp0 = _fp_unit(0.0)
    C1 = (math.pi * K / _GAMMA34 + 2.0 * math.sqrt(2.0)) / _GAMMA34
    u0 = _SQRTPI / _GAMMA34  # U(1/4, 1/2, 0)
    el2 = C1 * u0 + fp0
    # Same quantity with f_p(0) = 2 imposed exactly; the difference is a
    # quadrature-error diagnostic.
    crosscheck = (
        math.pi**1.5 * K + 2.0 * _GAMMA34 * (math.sqrt(2.0 * math.pi) + _GAMMA34**2)
    ) / _GAMMA34**3
    return {"K": K, "fp0": fp0, "C1": C1, "second_moment": el2, "crosscheck": crosscheck}


def second_moment_exact(lam: float) -> float:
    """E(L^2) at q = 1/2: C * U(1/4,1/2,0) + f_p(0), scaling as 1/lambda."""
    _check_lam(lam)
    return _unit_second_moment()["second_moment"] / lam


def second_moment_detail(lam: float) -> MomentReport:
    """Second-moment computation with its internal diagnostics exposed."""
    _check_lam(lam)
    unit = _unit_second_moment()
    diags = {
        "K": unit["K"],
        "fp0": unit["fp0"] / lam,
        "C1_unit": unit["C1"],
        "closed_form_crosscheck": unit["crosscheck"] / lam,
        "crosscheck_gap": abs(unit["second_moment"] - unit["crosscheck"]) / lam,
    }
    return MomentReport(
        lam=lam,
        q=Fraction(1, 2),
        mean=expected_length_exact(lam),
        second_moment=unit["second_moment"] / lam,
        method="closed_form",
        numeric_diagnostics=diags,
    )


def mu2(y: float, lam: float) -> float:
    """Conditional second moment of remaining length at height y (q=1/2)."""
    _check_lam(lam)
    if y < 0:
        raise ValueError(f"y must be >= 0, got {y}")
    unit = _unit_second_moment()
    z = math.sqrt(0.5 * lam) * y
    return (unit["C1"] * kummer_u(0.25, 0.5, z * z) + _fp_unit(z)) / lam


# ---------------------------------------------------------------------------
# General-q mean via the conditional-mean integral equation.
#
# Conditioned on boundary height y, the next trapezoid base r has density
# f(r|y) = lambda (r+y) exp(-lambda (r^2/2 + r y)); with probability q the
# stopping seed extends the episode with a new height uniform on
# (0, r+y).  The conditional mean mu(y) therefore satisfies
#
#   mu(y) = E[r | y] + q * E[ S(r+y) / (r+y) | y ],   S(w) = int_0^w mu.
#
# The map is a contraction with factor q; mu decays algebraically like
# y^{-(1-q)} for large y (substituting a power law above reproduces the
# exponent), which fixes the analytic tail used beyond the grid.
# ---------------------------------------------------------------------------

_GLQ_NODES, _GLQ_WEIGHTS = np.polynomial.legendre.leggauss(96)
_GLQ_X = 0.5 * (_GLQ_NODES + 1.0)
_GLQ_W = 0.5 * _GLQ_WEIGHTS


def _solve_mu0(q: float, lam: float, grid_points: int, y_max: float,
               tol: float, max_iter: int) -> tuple[float, int, float]:
    M = grid_points
    j = np.arange(M + 1)
    y = y_max * (j / M) ** 2  # graded: dense near y = 0 where mu curves most
    h = np.diff(y)
    # Radial quadrature reaches trapezoid area 45/lambda (weight e^-45).
    Rmax = -y + np.sqrt(y * y + 90.0 / lam)
    r = Rmax[:, None] * _GLQ_X[None, :]
    w = r + y[:, None]
    dens = lam * w * np.exp(-lam * (0.5 * r * r + r * y[:, None]))
    W = dens * (Rmax[:, None] * _GLQ_W[None, :])
    m1 = (W * r).sum(axis=1)

    inside = w <= y_max
    k = np.clip(np.searchsorted(y, w) - 1, 0, M - 1)
    delta = w - y[k]
    wt = np.maximum(w, y_max)
    alpha = 1.0 - q
    tail_shape = y_max**alpha * (wt**q - y_max**q) / q

    mu = m1.copy()
    for it in range(1, max_iter + 1):
        slope = np.diff(mu) / h
        seg = 0.5 * (mu[:-1] + mu[1:]) * h
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        S = cum[k] + mu[k] * delta + 0.5 * slope[k] * delta * delta
        S = np.where(inside, S, cum[-1] + mu[-1] * tail_shape)
        mu_new = m1 + q * (W * (S / w)).sum(axis=1)
        diff = float(np.max(np.abs(mu_new - mu)))
        mu = mu_new
        if diff < tol:
            return float(mu[0]), it, diff
    raise ConvergenceError(
        f"fixed-point iteration residual {diff:.3e} > {tol:.3e} "
        f"after {max_iter} iterations (q={q}, lam={lam})"
    )


def general_q_mean(
    q,
    lam: float,
    grid_points: int = 400,
    y_max: float | None = None,
    tol: float = 1e-8,
    max_iter: int = 4000,
    record_convergence: bool = True,
) -> MomentReport:
    """E(L) of the east ray for general q by fixed-point iteration.

    Discretizes the boundary height on a graded grid over [0, y_max]
    (default 8/sqrt(lambda)) and iterates the conditional-mean map until
    successive iterates differ by less than ``tol`` in sup norm.  With
    ``record_convergence`` the solve is repeated on two coarser grids and
    the observed order of convergence is reported in the diagnostics.
    """
    _check_lam(lam)
    qf = float(q)
    if not (0.0 < qf < 1.0):
        raise ValueError(f"q must lie strictly in (0, 1), got {q}")
    if y_max is None:
        y_max = 8.0 / math.sqrt(lam)

    value, iters, resid = _solve_mu0(qf, lam, grid_points, y_max, tol, max_iter)
    diags = {
        "grid_points": grid_points,
        "y_max": y_max,
        "sup_residual": resid,
        "iterations": iters,
        "gauss_nodes": len(_GLQ_X),
    }
    if record_convergence and grid_points >= 100:
        v_c, _, _ = _solve_mu0(qf, lam, grid_points // 4, y_max, tol, max_iter)
        v_m, _, _ = _solve_mu0(qf, lam, grid_points // 2, y_max, tol, max_iter)
        d1 = abs(v_m - v_c)
        d2 = abs(value - v_m)
        diags["refinement_values"] = [v_c, v_m, value]
        if d2 > 0:
            diags["observed_order"] = math.log2(d1 / d2)
    return MomentReport(
        lam=lam,
        q=Fraction(q) if not isinstance(q, float) else Fraction(q).limit_denominator(10**9),
        mean=value,
        second_moment=None,
        method="integral_equation",
        numeric_diagnostics=diags,
    )


def moment_report(q, lam: float) -> MomentReport:
    """Closed-form report at q = 1/2, integral-equation report otherwise."""
    if Fraction(q) == Fraction(1, 2):
        return second_moment_detail(lam)
    return general_q_mean(q, lam)
