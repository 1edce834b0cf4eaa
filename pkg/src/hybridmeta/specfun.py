"""Special functions used by the moment formulas.

Only the domains the analytic formulas touch are supported: ``2F1`` with a
complex first parameter and a non-positive argument, ``1F1`` with real
arguments, the integer-shape gamma survival function, and a few thin
wrappers over :mod:`scipy.special`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .errors import NonConvergence

__all__ = [
    "NonConvergence",
    "SeriesControl",
    "DEFAULT_SERIES",
    "gauss_2f1",
    "kummer_1f1",
    "upper_gamma_ratio",
    "reg_inc_beta",
    "erf",
    "pochhammer",
    "generalized_binomial",
]


@dataclass(frozen=True)
class SeriesControl:
    """Truncation settings for hypergeometric and binomial series."""

    max_terms: int = 512
    rel_tol: float = 1e-12

    def __post_init__(self) -> None:
        if int(self.max_terms) != self.max_terms or self.max_terms < 8:
            raise ValueError("max_terms must be an integer >= 8")
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError("rel_tol must lie in (0, 1)")


DEFAULT_SERIES = SeriesControl()

# Pfaff route is used while |a|*w stays below this; beyond it the alternating
# terms grow like exp(|a| w) and the connection route is more accurate.
_PFAFF_GROWTH_LIMIT = 6.0


def _series_unit_b(a, b2, c2, w, ctrl: SeriesControl, hard_cap: int):
    """Sum 2F1(a, b2; c2; w) for 0 <= w < 1 and array ``a``.

    Vectorised over ``a`` (and broadcast ``b2``/``c2``); the loop runs over the
    term index and stops once every element has converged.
    """
    a, b2, c2 = np.broadcast_arrays(
        np.asarray(a, dtype=complex), np.asarray(b2, dtype=complex), np.asarray(c2, dtype=complex)
    )
    term = np.ones(a.shape, dtype=complex)
    total = term.copy()
    quiet = np.zeros(a.shape, dtype=int)
    for k in range(hard_cap):
        term = term * (a + k) * (b2 + k) / ((c2 + k) * (k + 1)) * w
        total = total + term
        small = np.abs(term) <= ctrl.rel_tol * np.maximum(np.abs(total), 1e-300)
        quiet = np.where(small, quiet + 1, 0)
        if np.all(quiet >= 2):
            return total
    raise NonConvergence(
        f"2F1 series at w={w:.6g} did not converge within {hard_cap} terms"
    )


def _is_nonpos_int(x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return (x.imag == 0) & (x.real <= 0) & (x.real == np.round(x.real))


def _polynomial_2f1(n: int, b: float, c: float, z: float) -> float:
    term, total = 1.0, 1.0
    for k in range(n):
        term *= (-n + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
    return total


def _connection_2f1(a, b, c, z, ctrl: SeriesControl, hard_cap: int):
    """2F1 via the z -> 1/z connection formula followed by Pfaff on each piece.

    Both inner series run in ``1/(1-z)``; their term ratios tend to a bounded
    limit as |a| grows, so large imaginary ``a`` causes no cancellation.
    """
    b, c = complex(b), complex(c)
    w1 = 1.0 / (1.0 - z)
    mz = -z
    log_gc = sp.loggamma(c)
    # first piece: (-z)^-a (1-1/z)^-a = (1-z)^-a
    coef1 = np.exp(log_gc + sp.loggamma(b - a) - sp.loggamma(b) - sp.loggamma(c - a))
    s1 = _series_unit_b(a, c - b, a - b + 1.0, w1, ctrl, hard_cap)
    piece1 = coef1 * np.exp(-a * np.log1p(mz)) * s1
    # second piece: (-z)^-b (1-1/z)^-b = (1-z)^-b
    coef2 = np.exp(log_gc + sp.loggamma(a - b) - sp.loggamma(a) - sp.loggamma(c - b))
    s2 = _series_unit_b(b, c - a, b - a + 1.0, w1, ctrl, hard_cap)
    piece2 = coef2 * (1.0 - z) ** (-b) * s2
    return piece1 + piece2


def gauss_2f1(a, b: float, c: float, z: float, ctrl: SeriesControl = DEFAULT_SERIES):
    """Gauss hypergeometric function ``2F1(a, b; c; z)`` for ``z <= 0``.

    ``a`` may be complex and may be an array (evaluated elementwise); ``b``,
    ``c`` and ``z`` are real scalars.  Returns a real value when every ``a`` is
    real.

    Two routes are used.  For small ``|a| w`` with ``w = z/(z-1)`` the Pfaff
    transform gives a series in ``w``.  Otherwise the connection formula maps
    to two series in ``1 - w``, which stay well conditioned for large
    imaginary ``a`` and for very negative ``z``.

    Raises
    ------
    NonConvergence
        If the selected series needs more than ``ctrl.max_terms`` terms.
    """
    if z > 0:
        raise ValueError("gauss_2f1 supports z <= 0 only")
    if c <= 0 and c == round(c):
        raise ValueError("c must not be a non-positive integer")
    scalar = np.ndim(a) == 0
    a_arr = np.atleast_1d(np.asarray(a, dtype=complex))
    out = np.empty(a_arr.shape, dtype=complex)
    w = z / (z - 1.0) if z != 0 else 0.0

    poly = _is_nonpos_int(a_arr)
    pole = _is_nonpos_int(a_arr - b) | _is_nonpos_int(b - a_arr)
    pfaff = (np.abs(a_arr) * w <= _PFAFF_GROWTH_LIMIT) & (w <= 0.5)
    # a - b integral forces real a; scipy handles those degenerate limits
    real_pole = ~poly & pole
    use_pfaff = ~poly & ~pole & pfaff
    use_conn = ~poly & ~pole & ~pfaff

    for i in np.flatnonzero(poly):
        out[i] = _polynomial_2f1(int(round(-a_arr[i].real)), b, c, z)
    for i in np.flatnonzero(real_pole):
        out[i] = sp.hyp2f1(a_arr[i].real, b, c, z)
    if z == 0:
        out[:] = 1.0
    else:
        if use_pfaff.any():
            aa = a_arr[use_pfaff]
            s = _series_unit_b(aa, c - b, c, w, ctrl, ctrl.max_terms)
            out[use_pfaff] = np.exp(-aa * np.log1p(-z)) * s
        if use_conn.any():
            out[use_conn] = _connection_2f1(a_arr[use_conn], b, c, z, ctrl, ctrl.max_terms)

    if np.all(a_arr.imag == 0):
        out = out.real
    return out[0] if scalar else out


def kummer_1f1(a: float, b: float, z: float) -> float:
    """Confluent hypergeometric ``1F1(a; b; z)`` (real arguments)."""
    if b <= 0 and b == round(b):
        raise ValueError("b must not be a non-positive integer")
    val = float(sp.hyp1f1(a, b, z))
    if not np.isfinite(val):
        raise NonConvergence(f"1F1({a}; {b}; {z}) is not finite")
    return val


def upper_gamma_ratio(m: int, x):
    """Regularised upper incomplete gamma ``Gamma(m, x) / Gamma(m)`` for integer m.

    Uses the finite Poisson sum ``exp(-x) * sum_{k<m} x^k / k!``.
    """
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    term = np.ones_like(x)
    acc = np.ones_like(x)
    for k in range(1, int(m)):
        term = term * x / k
        acc = acc + term
    out = np.exp(-x) * acc
    return float(out) if out.ndim == 0 else out


def reg_inc_beta(x, a: float, b: float):
    """Regularised incomplete beta ``I_x(a, b)``."""
    return sp.betainc(a, b, x)


def erf(x):
    """Error function."""
    return sp.erf(x)


def pochhammer(a, k: int) -> complex:
    """Rising factorial ``a (a+1) ... (a+k-1)`` for complex ``a``.

    Small ``k`` is multiplied out directly (exact at the poles of Gamma);
    larger ``k`` goes through log-gamma.  Raises ``OverflowError`` when the
    magnitude is not representable.
    """
    if int(k) != k or k < 0:
        raise ValueError("k must be a nonnegative integer")
    a = complex(a)
    if k <= 64 or _is_nonpos_int(a):
        out = 1.0 + 0.0j
        for i in range(int(k)):
            out *= a + i
        if not np.isfinite(out):
            raise OverflowError(f"({a})_{k} overflows")
        return out
    log_val = sp.loggamma(a + k) - sp.loggamma(a)
    if log_val.real > 709.0:
        raise OverflowError(f"({a})_{k} overflows")
    return complex(np.exp(log_val))


def generalized_binomial(b, k: int) -> complex:
    """``binom(b, k) = b (b-1) ... (b-k+1) / k!`` for complex ``b``.

    Written as ``(-1)^k (-b)_k / k!`` with the rising factorial.
    """
    if int(k) != k or k < 0:
        raise ValueError("k must be a nonnegative integer")
    nb = -complex(b)
    if k <= 64 or _is_nonpos_int(nb):
        return (-1) ** k * pochhammer(nb, k) / float(sp.factorial(k, exact=True))
    log_val = sp.loggamma(nb + k) - sp.loggamma(nb) - sp.gammaln(k + 1)
    return complex((-1) ** k * np.exp(log_val))
