"""Composite Gauss-Legendre rules and adaptive wrappers used by the radial integrals."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import QuadratureFailure

# log-integrand drop (nats) beyond which a region is treated as negligible
LOG_NEGLIGIBLE = 60.0


@lru_cache(maxsize=32)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def composite_rule(edges, panels_per_segment: int, order: int = 16):
    """Nodes and weights for Gauss-Legendre on each segment split into equal panels.

    ``edges`` is a sorted 1-D sequence; zero-width segments are skipped.
    """
    x, w = _leggauss(order)
    nodes, weights = [], []
    edges = np.asarray(edges, dtype=float)
    for lo, hi in zip(edges[:-1], edges[1:]):
        if not hi > lo:
            continue
        pe = np.linspace(lo, hi, panels_per_segment + 1)
        half = 0.5 * np.diff(pe)
        mid = 0.5 * (pe[:-1] + pe[1:])
        nodes.append((mid[:, None] + half[:, None] * x[None, :]).ravel())
        weights.append((half[:, None] * w[None, :]).ravel())
    if not nodes:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(nodes), np.concatenate(weights)


def effective_upper(lo: float, hi: float, log_f, n_probe: int = 400) -> tuple[float, float]:
    """Largest point in [lo, hi] where ``log_f`` is within LOG_NEGLIGIBLE of its peak.

    ``log_f`` maps an array of abscissae to log-magnitudes (it may return a
    2-D array with one row per parameter value; the envelope is used).
    Returns (upper, boundary_excess) where boundary_excess is the log-height
    at ``hi`` relative to the peak (0 means the peak sits on the boundary).
    """
    if hi <= lo:
        return hi, -np.inf
    span = hi - lo
    probe = lo + span * np.concatenate(([0.0], np.geomspace(1e-9, 1.0, n_probe)))
    vals = np.asarray(log_f(probe), dtype=float)
    if vals.ndim == 2:
        vals = vals.max(axis=0)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    peak = vals.max()
    if not np.isfinite(peak):
        return lo, -np.inf
    alive = np.flatnonzero(vals >= peak - LOG_NEGLIGIBLE)
    last = alive[-1]
    upper = hi if last == len(probe) - 1 else probe[last + 1]
    return float(upper), float(vals[-1] - peak)


def quad(f, a: float, b: float, points=None, epsrel: float = 1e-10, epsabs: float = 1e-14, limit: int = 400):
    """scipy.integrate.quad with a QuadratureFailure on poor error estimates."""
    if not b > a:
        return 0.0, 0.0
    pts = None
    if points is not None:
        pts = [p for p in points if a < p < b] or None
    val, err = integrate.quad(f, a, b, points=pts, epsrel=epsrel, epsabs=epsabs, limit=limit)
    if err > max(1e-7, 1e-6 * abs(val)):
        raise QuadratureFailure(f"quad on [{a:g}, {b:g}] error estimate {err:.3g}", err)
    return val, err
