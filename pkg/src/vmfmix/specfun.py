"""
Special functions for the von Mises-Fisher density and Dirichlet expectations.

Everything here works in log space. The central routine is
:func:`log_bessel_i`, the log of the modified Bessel function of the first
kind, which is evaluated in one of two regimes:

* ``x < max(12, nu / 2)``: the ascending power series
  ``I_nu(x) = sum_m (x/2)^(2m+nu) / (m! Gamma(m+nu+1))``. Every term is
  positive, so summing the log-terms with log-sum-exp is free of
  cancellation and cannot overflow.
* otherwise: Debye's uniform large-order expansion. For small orders
  (``nu < DEBYE_MIN_ORDER``) the expansion is evaluated at a shifted order
  ``nu + M`` and brought back down with the backward three-term recurrence
  on the ratios ``I_{j+1} / I_j``, which is the stable direction for ``I``.

Digamma and log-gamma delegate to :mod:`scipy.special` behind domain checks.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import Polynomial
from scipy import optimize, special

__all__ = [
    "DomainError",
    "SERIES_SWITCH",
    "DEBYE_MIN_ORDER",
    "log_bessel_i",
    "log_vmf_normalizer",
    "log_sphere_area",
    "digamma",
    "log_gamma",
    "bessel_ratio_a",
    "invert_bessel_ratio",
]

#: Power series is used for ``x < max(SERIES_SWITCH, nu / 2)``.
SERIES_SWITCH = 12.0
#: Smallest order at which the Debye expansion is evaluated directly.
DEBYE_MIN_ORDER = 50.0
_DEBYE_TERMS = 10
_LOG_2PI = math.log(2.0 * math.pi)


class DomainError(ValueError):
    """Argument outside the mathematical domain of a special function."""


def _debye_polynomials(n: int) -> list[Polynomial]:
    # U_{k+1}(p) = p^2 (1 - p^2) U_k'(p) / 2 + (1/8) int_0^p (1 - 5 t^2) U_k(t) dt
    p = Polynomial([0.0, 1.0])
    polys = [Polynomial([1.0])]
    for _ in range(n - 1):
        u = polys[-1]
        nxt = 0.5 * p**2 * (1 - p**2) * u.deriv() + 0.125 * ((1 - 5 * p**2) * u).integ()
        polys.append(nxt)
    return polys


_DEBYE_U = _debye_polynomials(_DEBYE_TERMS)


def _series_log_sum(nu: float, x: float) -> float:
    """log of ``I_nu(x) / (x/2)^nu``, by the ascending series."""
    if x == 0.0:
        return -special.gammaln(nu + 1.0)
    # terms peak near m* and have width ~ sigma; 10 sigma past the peak is
    # far below double precision
    peak = 0.5 * (math.sqrt(nu * nu + x * x) - nu)
    sigma = math.sqrt(peak * (peak + nu) / (2.0 * peak + nu + 1.0)) + 1.0
    m = np.arange(int(peak + 10.0 * sigma) + 30, dtype=float)
    log_terms = 2.0 * m * math.log(0.5 * x) - special.gammaln(m + 1.0) - special.gammaln(m + nu + 1.0)
    return float(special.logsumexp(log_terms))


def _debye_log_i(nu: float, x: float) -> float:
    root = math.hypot(nu, x)
    p = nu / root
    eta_term = root + nu * math.log(x / (nu + root))
    total = 0.0
    scale = 1.0
    for u in _DEBYE_U:
        total += u(p) * scale
        scale /= nu
    return eta_term - 0.5 * math.log(2.0 * math.pi * nu) - 0.5 * math.log(root / nu) + math.log(total)


def _asymptotic_log_i(nu: float, x: float) -> float:
    if nu >= DEBYE_MIN_ORDER:
        return _debye_log_i(nu, x)
    shift = math.ceil(DEBYE_MIN_ORDER - nu)
    top = nu + shift
    log_top = _debye_log_i(top, x)
    ratio = math.exp(_debye_log_i(top + 1.0, x) - log_top)
    log_ratio_sum = 0.0
    # r_j = I_{j+1}/I_j = 1 / (2 (j+1) / x + r_{j+1}), walking j down to nu
    for j in range(shift - 1, -1, -1):
        ratio = 1.0 / (2.0 * (nu + j + 1.0) / x + ratio)
        log_ratio_sum += math.log(ratio)
    return log_top - log_ratio_sum


def _log_bessel_i_scalar(nu: float, x: float) -> float:
    if nu < 0 or x < 0 or math.isnan(nu) or math.isnan(x):
        raise DomainError(f"log_bessel_i requires nu >= 0 and x >= 0, got nu={nu}, x={x}")
    if x == 0.0:
        return 0.0 if nu == 0.0 else -math.inf
    if x < max(SERIES_SWITCH, 0.5 * nu):
        return nu * math.log(0.5 * x) + _series_log_sum(nu, x)
    return _asymptotic_log_i(nu, x)


_log_bessel_i_vec = np.vectorize(_log_bessel_i_scalar, otypes=[float])


def log_bessel_i(nu, x):
    """
    Log of the modified Bessel function of the first kind, ``log I_nu(x)``.

    Parameters
    ----------
    nu : float or array_like
        Order, ``nu >= 0``.
    x : float or array_like
        Argument, ``x >= 0``.

    Returns
    -------
    float or ndarray
        ``log I_nu(x)``. ``I_nu(0) = 0`` for ``nu > 0`` and is reported as
        ``-inf``; every other point in the domain gives a finite value.

    Raises
    ------
    DomainError
        If ``nu < 0`` or ``x < 0``.
    """
    if np.ndim(nu) == 0 and np.ndim(x) == 0:
        return _log_bessel_i_scalar(float(nu), float(x))
    return _log_bessel_i_vec(nu, x)


def log_sphere_area(d: int) -> float:
    """Log surface area of the unit sphere S^{d-1} in R^d."""
    return math.log(2.0) + 0.5 * d * math.log(math.pi) - special.gammaln(0.5 * d)


def _check_dim(d) -> int:
    if int(d) != d or d < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {d}")
    return int(d)


def log_vmf_normalizer(d: int, kappa: float) -> float:
    """
    Log normalizing constant of the vMF density on S^{d-1}.

    ``c_d(kappa) = kappa^(d/2-1) / ((2 pi)^(d/2) I_{d/2-1}(kappa))``. In the
    series regime the ``kappa^(d/2-1)`` factor is cancelled analytically, so
    ``kappa = 0`` gives exactly the uniform density ``-log_sphere_area(d)``.
    """
    d = _check_dim(d)
    kappa = float(kappa)
    if not kappa >= 0.0:
        raise DomainError(f"kappa must be >= 0, got {kappa}")
    nu = 0.5 * d - 1.0
    if kappa < max(SERIES_SWITCH, 0.5 * nu):
        return nu * math.log(2.0) - 0.5 * d * _LOG_2PI - _series_log_sum(nu, kappa)
    return nu * math.log(kappa) - 0.5 * d * _LOG_2PI - _asymptotic_log_i(nu, kappa)


def digamma(x):
    """Digamma function for ``x > 0``."""
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0):
        raise DomainError("digamma requires x > 0")
    return special.digamma(x)


def log_gamma(x):
    """Log-gamma for ``x > 0``."""
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0):
        raise DomainError("log_gamma requires x > 0")
    return special.gammaln(x)


def bessel_ratio_a(d: int, kappa: float) -> float:
    """
    Mean resultant length of a vMF(kappa) on S^{d-1}.

    ``A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa)``, strictly increasing
    from 0 to 1.
    """
    d = _check_dim(d)
    kappa = float(kappa)
    if not kappa > 0.0:
        raise DomainError(f"kappa must be > 0, got {kappa}")
    nu = 0.5 * d - 1.0
    return math.exp(_log_bessel_i_scalar(nu + 1.0, kappa) - _log_bessel_i_scalar(nu, kappa))


def invert_bessel_ratio(d: int, rbar: float) -> float:
    """
    Solve ``A_d(kappa) = rbar`` for kappa by bracketed root finding.

    This is the exact maximum-likelihood concentration for a mean
    resultant length ``rbar``; the M-step uses a closed-form approximation
    instead and this solver serves as its reference.
    """
    d = _check_dim(d)
    rbar = float(rbar)
    if not 0.0 < rbar < 1.0:
        raise DomainError(f"rbar must lie in (0, 1), got {rbar}")

    def f(k):
        return bessel_ratio_a(d, k) - rbar

    # A_d(k) < k/d near 0 and A_d(k) ~ 1 - (d-1)/(2k) for large k
    lo = rbar * d * 0.5
    while f(lo) > 0:
        lo *= 0.5
    hi = max((d - 1.0) / (1.0 - rbar), 2.0 * lo, 1e-3)
    while f(hi) < 0:
        hi *= 2.0
    return optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
