"""Airy function Ai(z) for complex z and the modified Bessel function I1.

Both functions switch between a convergent power series near the origin and
an asymptotic expansion for large arguments.  The Airy power series is summed
in double-double arithmetic: in the sector where Ai decays, the two series
that make up Ai grow like exp(|zeta|) and cancel, so plain float64 summation
would lose roughly eight digits at the switch radius.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RangeError

__all__ = [
    "SeriesConfig",
    "AIRY_CONFIG",
    "BESSEL_CONFIG",
    "AIRY_MAX_ABS",
    "airy_ai",
    "airy_ai_series",
    "airy_ai_asymptotic",
    "bessel_i0",
    "bessel_i1",
    "bessel_i1_prime",
]


@dataclass(frozen=True)
class SeriesConfig:
    """Branch-switching parameters of a series/asymptotic evaluator.

    Attributes
    ----------
    series_cutoff_radius : float
        Arguments with modulus below this use the power series.
    max_terms : int
        Upper bound on the number of series terms.
    target_rel_err : float
        Early-exit tolerance for the series, relative to the running value.
    """

    series_cutoff_radius: float = 6.0
    max_terms: int = 80
    target_rel_err: float = 1e-14

    def __post_init__(self):
        if not self.series_cutoff_radius > 0:
            raise DomainError("series_cutoff_radius must be positive")
        if not 0 < self.target_rel_err <= 1e-6:
            raise DomainError("target_rel_err must lie in (0, 1e-6]")
        if self.max_terms < 1:
            raise DomainError("max_terms must be at least 1")


AIRY_CONFIG = SeriesConfig(6.0, 80, 1e-14)
BESSEL_CONFIG = SeriesConfig(15.0, 80, 1e-14)
AIRY_MAX_ABS = 50.0

# Ai(0) and -Ai'(0) as unevaluated sums hi + lo.
_C1 = (0.3550280538878172, 2.05233632436212e-17)
_C2 = (0.2588194037928068, -2.522243111610832e-17)


# ---------------------------------------------------------------------------
# double-double helpers (elementwise on float64 arrays)

def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    c = 134217729.0 * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_add(a, b):
    s, e = _two_sum(a[0], b[0])
    return _quick_two_sum(s, e + a[1] + b[1])


def _dd_neg(a):
    return -a[0], -a[1]


def _dd_mul(a, b):
    p, e = _two_prod(a[0], b[0])
    return _quick_two_sum(p, e + a[0] * b[1] + a[1] * b[0])


def _dd_div_scalar(a, d):
    q = a[0] / d
    p, e = _two_prod(q, d)
    r = ((a[0] - p) - e + a[1]) / d
    return _quick_two_sum(q, r)


def _cdd_mul(x, y):
    """Product of complex double-doubles given as (re, im) pairs."""
    re = _dd_add(_dd_mul(x[0], y[0]), _dd_neg(_dd_mul(x[1], y[1])))
    im = _dd_add(_dd_mul(x[0], y[1]), _dd_mul(x[1], y[0]))
    return re, im


def _cdd_abs_estimate(x):
    return np.hypot(x[0][0], x[1][0])


# ---------------------------------------------------------------------------
# Airy function

def _as_complex_array(z):
    arr = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise DomainError("Airy argument must be finite")
    return arr


def airy_ai_series(z, config: SeriesConfig = AIRY_CONFIG):
    """Maclaurin series of Ai(z), summed in double-double precision.

    Ai(z) = c1 f(z) - c2 g(z) with
    f = sum_k 3^k (1/3)_k z^{3k} / (3k)! and
    g = sum_k 3^k (2/3)_k z^{3k+1} / (3k+1)!.
    """
    arr = _as_complex_array(z)
    flat = arr.ravel()
    x = flat.real.copy()
    y = flat.imag.copy()
    zero = np.zeros_like(x)

    xx = _two_prod(x, x)
    yy = _two_prod(y, y)
    xy = _two_prod(x, y)
    z2 = (_dd_add(xx, _dd_neg(yy)), (2.0 * xy[0], 2.0 * xy[1]))
    z1 = ((x, zero), (y, zero))
    z3 = _cdd_mul(z2, z1)

    one = ((np.ones_like(x), zero), (zero.copy(), zero.copy()))
    tf = one
    tg = z1
    sf = one
    sg = z1
    for k in range(1, config.max_terms):
        tf = _cdd_mul(tf, z3)
        tf = (_dd_div_scalar(tf[0], float((3 * k - 1) * (3 * k))),
              _dd_div_scalar(tf[1], float((3 * k - 1) * (3 * k))))
        tg = _cdd_mul(tg, z3)
        tg = (_dd_div_scalar(tg[0], float((3 * k) * (3 * k + 1))),
              _dd_div_scalar(tg[1], float((3 * k) * (3 * k + 1))))
        sf = (_dd_add(sf[0], tf[0]), _dd_add(sf[1], tf[1]))
        sg = (_dd_add(sg[0], tg[0]), _dd_add(sg[1], tg[1]))
        # compare against the combined value, not the (much larger) f and g
        val = _cdd_abs_estimate(sf) * _C1[0] - _cdd_abs_estimate(sg) * _C2[0]
        scale = np.maximum(np.abs(val), 1e-300)
        tail = _cdd_abs_estimate(tf) + _cdd_abs_estimate(tg)
        if k > 2 and np.all(tail <= config.target_rel_err * 1e-4 * scale):
            break
        if k > 2 and np.all(tail == 0.0):
            break

    c1 = (np.full_like(x, _C1[0]), np.full_like(x, _C1[1]))
    c2 = (np.full_like(x, _C2[0]), np.full_like(x, _C2[1]))
    re = _dd_add(_dd_mul(c1, sf[0]), _dd_neg(_dd_mul(c2, sg[0])))
    im = _dd_add(_dd_mul(c1, sf[1]), _dd_neg(_dd_mul(c2, sg[1])))
    out = (re[0] + re[1]) + 1j * (im[0] + im[1])
    return out.reshape(arr.shape)


def _airy_asymptotic_principal(z):
    """Single-exponential expansion, accurate for |arg z| <= 2*pi/3."""
    zeta = (2.0 / 3.0) * z * np.sqrt(z)
    inv = 1.0 / zeta
    total = np.ones_like(z)
    prev = np.full(z.shape, np.inf)
    active = np.ones(z.shape, dtype=bool)
    u = 1.0
    for k in range(1, 60):
        u = u * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
        new_term = (-1) ** k * u * inv ** k
        mag = np.abs(new_term)
        # optimal truncation: stop once terms start growing
        active &= mag < prev
        total = np.where(active, total + new_term, total)
        prev = np.where(active, mag, prev)
        active &= mag > 1e-17 * np.abs(total)
        if not np.any(active):
            break
    return np.exp(-zeta) / (2.0 * np.sqrt(np.pi) * z ** 0.25) * total


def airy_ai_asymptotic(z):
    """Large-|z| asymptotic evaluation of Ai(z).

    Uses the principal expansion for |arg z| <= 2*pi/3 and the connection
    formula Ai(z) = -w Ai(w z) - w^2 Ai(w^2 z), w = exp(2*pi*i/3), closer to
    the negative real axis where Ai oscillates.
    """
    arr = _as_complex_array(z)
    flat = arr.ravel()
    out = np.empty_like(flat)
    ang = np.abs(np.angle(flat))
    near = ang <= 2.0 * np.pi / 3.0
    if np.any(near):
        out[near] = _airy_asymptotic_principal(flat[near])
    far = ~near
    if np.any(far):
        w = np.exp(2j * np.pi / 3.0)
        zf = flat[far]
        out[far] = (-w * _airy_asymptotic_principal(w * zf)
                    - w * w * _airy_asymptotic_principal(w * w * zf))
    return out.reshape(arr.shape)


def airy_ai(z, config: SeriesConfig = AIRY_CONFIG):
    """Principal Airy function Ai(z) for complex z with |z| <= 50.

    Parameters
    ----------
    z : complex or array_like of complex
        Argument(s).
    config : SeriesConfig, optional
        Switch radius and series controls.

    Returns
    -------
    complex or ndarray of complex
        Ai(z), same shape as ``z``.

    Raises
    ------
    RangeError
        If any ``|z| > 50``.
    """
    arr = _as_complex_array(z)
    if np.any(np.abs(arr) > AIRY_MAX_ABS):
        raise RangeError(f"|z| exceeds the validated range {AIRY_MAX_ABS}")
    out = np.empty(arr.shape, dtype=complex)
    small = np.abs(arr) < config.series_cutoff_radius
    if np.any(small):
        out[small] = airy_ai_series(arr[small], config)
    if np.any(~small):
        out[~small] = airy_ai_asymptotic(arr[~small])
    if np.ndim(z) == 0:
        return complex(out[()])
    return out


# ---------------------------------------------------------------------------
# Modified Bessel functions

def _check_real_nonneg(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("Bessel argument must be finite")
    if np.any(arr < 0):
        raise DomainError("Bessel argument must be nonnegative")
    return arr


def _bessel_series(x, order: int, config: SeriesConfig):
    """sum_k (x/2)^(2k+order) / (k! (k+order)!)."""
    h = x / 2.0
    q = h * h
    term = h ** order / float(np.prod(np.arange(1, order + 1)))
    total = term.copy()
    for k in range(1, 4 * config.max_terms):
        term = term * q / (k * (k + order))
        total = total + term
        if np.all(term <= config.target_rel_err * 1e-3 * total):
            break
    return total


def _bessel_asymptotic(x, order: int):
    """exp(x)/sqrt(2 pi x) * sum_k (-1)^k a_k(order) / x^k."""
    mu = 4.0 * order * order
    total = np.ones_like(x)
    term = np.ones_like(x)
    prev = np.full(x.shape, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 60):
        term = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(term)
        active &= mag < prev
        total = np.where(active, total + term, total)
        prev = np.where(active, mag, prev)
        active &= mag > 1e-17 * np.abs(total)
        if not np.any(active):
            break
    return np.exp(x) / np.sqrt(2.0 * np.pi * x) * total


def _bessel(x, order, config):
    arr = _check_real_nonneg(x)
    out = np.empty(arr.shape)
    small = arr < config.series_cutoff_radius
    if np.any(small):
        out[small] = _bessel_series(arr[small], order, config)
    if np.any(~small):
        out[~small] = _bessel_asymptotic(arr[~small], order)
    return out


def bessel_i0(x, config: SeriesConfig = BESSEL_CONFIG):
    """Modified Bessel function I0(x) for x >= 0."""
    out = _bessel(x, 0, config)
    return float(out) if np.ndim(x) == 0 else out


def bessel_i1(x, config: SeriesConfig = BESSEL_CONFIG):
    """Modified Bessel function of the first kind, I1(x), for x >= 0.

    Parameters
    ----------
    x : float or array_like
        Nonnegative argument(s).

    Returns
    -------
    float or ndarray
        I1(x); zero at the origin and positive elsewhere.

    Raises
    ------
    DomainError
        If any ``x < 0``.
    """
    out = _bessel(x, 1, config)
    return float(out) if np.ndim(x) == 0 else out


def bessel_i1_prime(x, config: SeriesConfig = BESSEL_CONFIG):
    """Derivative I1'(x) = I0(x) - I1(x)/x, with the limit 1/2 at x = 0.

    Below the switch radius the derivative series
    sum_k (2k+1) (x/2)^(2k) / (2 k! (k+1)!) is summed directly.
    """
    arr = _check_real_nonneg(x)
    out = np.empty(arr.shape)
    small = arr < config.series_cutoff_radius
    if np.any(small):
        xs = arr[small]
        q = (xs / 2.0) ** 2
        term = np.full(xs.shape, 0.5)
        total = term.copy()
        for k in range(1, 4 * config.max_terms):
            # ratio of consecutive terms of (2k+1) q^k / (2 k! (k+1)!)
            term = term * q * (2 * k + 1) / ((2 * k - 1) * k * (k + 1))
            total = total + term
            if np.all(term <= config.target_rel_err * 1e-3 * total):
                break
        out[small] = total
    if np.any(~small):
        xl = arr[~small]
        out[~small] = _bessel_asymptotic(xl, 0) - _bessel_asymptotic(xl, 1) / xl
    return float(out) if np.ndim(x) == 0 else out
