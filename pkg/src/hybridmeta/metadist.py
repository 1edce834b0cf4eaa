"""Meta distributions from moments: Gil-Pelaez inversion and the Beta fit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy import special as sp

from ._quadrature import _leggauss
from .errors import IntegrationFailure
from .model import NetworkConfig
from .moments import MomentEngine, Variant, rate_thresholds
from .specfun import reg_inc_beta

__all__ = [
    "Method",
    "MetaCurve",
    "BetaFit",
    "Degenerate",
    "gil_pelaez_ccdf",
    "gil_pelaez_curve",
    "beta_fit",
    "beta_ccdf",
    "beta_moment_fn",
    "moment_supplier",
    "meta_sir",
    "meta_rate",
    "LINKS",
]

MomentFn = Callable[[np.ndarray], np.ndarray]


class Method(str, Enum):
    GIL_PELAEZ = "GilPelaez"
    BETA = "BetaApprox"
    EMPIRICAL = "Empirical"


@dataclass(frozen=True)
class MetaCurve:
    x_grid: tuple[float, ...]
    ccdf: tuple[float, ...]
    method: Method
    theta_or_rate: object = None
    raw: tuple[float, ...] | None = field(default=None, compare=False)

    def as_arrays(self):
        return np.asarray(self.x_grid), np.asarray(self.ccdf)


@dataclass(frozen=True)
class BetaFit:
    shape_a: float
    shape_b: float

    def __post_init__(self):
        if not (self.shape_a > 0 and self.shape_b > 0):
            raise ValueError(f"Beta shapes must be positive, got ({self.shape_a}, {self.shape_b})")

    def moments(self) -> tuple[float, float]:
        a, b = self.shape_a, self.shape_b
        m1 = a / (a + b)
        return m1, m1 * (a + 1.0) / (a + b + 1.0)


@dataclass(frozen=True)
class Degenerate:
    """Point-mass marker returned by :func:`beta_fit` when the variance is zero."""

    value: float


# ----------------------------------------------------------------- Gil-Pelaez


class _MomentCache:
    """Moments on a uniform base grid in t, extended on demand."""

    def __init__(self, moment_fn: MomentFn, step: float):
        self.fn = moment_fn
        self.step = step
        self.t = np.zeros(1)
        self.m = np.asarray(moment_fn(self.t), dtype=complex)
        self.phase = np.unwrap(np.angle(self.m))

    def extend(self, t_end: float) -> None:
        if self.t[-1] >= t_end:
            return
        n_new = int(math.ceil((t_end - self.t[-1]) / self.step))
        t_new = self.t[-1] + self.step * np.arange(1, n_new + 1)
        m_new = np.asarray(self.fn(t_new), dtype=complex)
        self.t = np.concatenate([self.t, t_new])
        self.m = np.concatenate([self.m, m_new])
        ang = np.angle(self.m)
        self.phase = np.unwrap(ang)


def _choose_step(moment_fn: MomentFn) -> float:
    """Base step small enough that arg M moves less than pi/4 per step on [0, 20]."""
    step = 0.25
    for _ in range(12):
        t = np.arange(0.0, 20.0 + step, step)
        ph = np.unwrap(np.angle(np.asarray(moment_fn(t), dtype=complex)))
        if np.max(np.abs(np.diff(ph))) < math.pi / 4:
            return step
        step /= 2.0
    return step


def _sign_intervals(t: np.ndarray, phi: np.ndarray, max_term: float, max_panel: float):
    """Panels covering [t0, t_end] and, per panel, the index of its sign interval.

    Sign intervals end where phi crosses a multiple of pi, so the integral
    over consecutive intervals alternates in sign.  With fewer than two
    crossings the phase is nearly flat and intervals are cut at ``max_term``
    so the term sequence keeps growing.  Each
    interval is split into panels no longer than ``max_panel``.
    """
    # the offset keeps rounding noise on a phase flat at a multiple of pi
    # (an atom at x) from producing spurious crossings
    k = np.floor(phi / math.pi + 1e-9)
    idx = np.flatnonzero(np.diff(k) != 0)
    cross = []
    for i in idx:
        # phi may pass several multiples of pi between samples
        lo_k, hi_k = sorted((k[i], k[i + 1]))
        for kk in np.arange(lo_k + 1, hi_k + 1):
            frac = (kk * math.pi - phi[i]) / (phi[i + 1] - phi[i])
            cross.append(t[i] + frac * (t[i + 1] - t[i]))
    edges = np.unique(np.concatenate(([t[0]], np.asarray(cross, dtype=float), [t[-1]])))
    if len(cross) >= 2:
        max_term = math.inf
    bounds = [edges[0]]
    for e in edges[1:]:
        gap = e - bounds[-1]
        if gap > max_term:
            n = int(math.ceil(gap / max_term))
            bounds.extend(bounds[-1] + gap * np.arange(1, n) / n)
        bounds.append(e)
    lo_all, hi_all, owner = [], [], []
    for j, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:])):
        n = max(1, int(math.ceil((hi - lo) / max_panel)))
        pe = np.linspace(lo, hi, n + 1)
        lo_all.append(pe[:-1])
        hi_all.append(pe[1:])
        owner.append(np.full(n, j))
    return np.concatenate(lo_all), np.concatenate(hi_all), np.concatenate(owner)


def _euler_average(partial: np.ndarray, depth: int) -> float:
    vals = partial[-(depth + 1):].astype(float)
    while len(vals) > 1:
        vals = 0.5 * (vals[:-1] + vals[1:])
    return float(vals[0])


def _gp_integral(cache: _MomentCache, log_x: float, tol: float, t_cap: float) -> tuple[float, float]:
    order = 16
    xg, wg = _leggauss(order)
    span = 40.0
    max_panel = max(4.0 * cache.step, 2.0)
    max_term = 64.0
    while True:
        cache.extend(span)
        phi = cache.phase - cache.t * log_x
        lo, hi, owner = _sign_intervals(cache.t, phi, max_term, max_panel)
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes = mid[:, None] + half[:, None] * xg[None, :]
        mvals = np.asarray(cache.fn(nodes.ravel()), dtype=complex).reshape(nodes.shape)
        integrand = np.imag(np.exp(-1j * nodes * log_x) * mvals) / nodes
        panel = np.sum(integrand * (half[:, None] * wg[None, :]), axis=1)
        terms = np.bincount(owner, weights=panel)
        partial = np.cumsum(terms)
        n = len(partial)
        depth = min(12, n - 1)
        if n >= 16:
            ests = np.array([_euler_average(partial[: i + 1], depth) for i in range(n - 4, n)])
            spread = float(np.max(np.abs(np.diff(ests))))
            if spread < tol:
                return ests[-1], spread
        else:
            spread = math.inf
        if span >= t_cap:
            raise IntegrationFailure(f"Gil-Pelaez integral unsettled at t={span:g}", spread)
        span *= 2.0


def gil_pelaez_ccdf(moment_fn: MomentFn, x: float, *, tol: float = 1e-7, t_cap: float = 2.0e5,
                    clamp: bool = True, _cache: _MomentCache | None = None) -> float:
    """``P(P_s > x) = 1/2 + (1/pi) int_0^inf Im(exp(-jt ln x) M_jt) / t dt``.

    ``moment_fn`` maps an array of real ``t`` to ``M_jt``.  The integral is
    split at zeros of the integrand's phase so consecutive pieces alternate in
    sign; the tail is summed with repeated averaging of partial sums.
    ``x`` outside (0, 1) returns 1 (x <= 0) or 0 (x >= 1).
    """
    if x <= 0:
        return 1.0
    if x >= 1:
        return 0.0
    cache = _cache or _MomentCache(moment_fn, _choose_step(moment_fn))
    val, _ = _gp_integral(cache, math.log(x), tol * math.pi, t_cap)
    out = 0.5 + val / math.pi
    return min(max(out, 0.0), 1.0) if clamp else out


def gil_pelaez_curve(moment_fn: MomentFn, x_grid: Sequence[float], *, tol: float = 1e-7,
                     clamp: bool = True) -> np.ndarray:
    """Gil-Pelaez CCDF over ``x_grid`` with a shared moment cache."""
    cache = _MomentCache(moment_fn, _choose_step(moment_fn))
    return np.array([gil_pelaez_ccdf(moment_fn, float(x), tol=tol, clamp=clamp, _cache=cache) for x in x_grid])


# ----------------------------------------------------------------------- Beta


def beta_fit(m1: float, m2: float) -> BetaFit | Degenerate:
    """Beta distribution matching the first two moments.

    ``beta = (m1 - m2)(1 - m1) / (m2 - m1^2)`` and ``a = beta m1 / (1 - m1)``.
    A zero variance returns :class:`Degenerate`.
    """
    var = m2 - m1 * m1
    if m1 <= 0.0 or m1 >= 1.0:
        return Degenerate(min(max(m1, 0.0), 1.0))
    if m2 > m1:
        raise ValueError("second moment cannot exceed the first for a [0,1] variable")
    if var < -1e-12:
        raise ValueError("second moment below the squared mean")
    if var <= 1e-15 * m1:
        return Degenerate(m1)
    b = (m1 - m2) * (1.0 - m1) / var
    a = b * m1 / (1.0 - m1)
    return BetaFit(a, b)


def beta_ccdf(fit: BetaFit | Degenerate, x):
    """``1 - I_x(a, b)`` (step function for a point mass)."""
    x = np.asarray(x, dtype=float)
    if isinstance(fit, Degenerate):
        out = np.where(x < fit.value, 1.0, 0.0)
    else:
        out = 1.0 - reg_inc_beta(np.clip(x, 0.0, 1.0), fit.shape_a, fit.shape_b)
        out = np.where(x <= 0, 1.0, np.where(x >= 1, 0.0, out))
    return float(out) if out.ndim == 0 else out


def beta_moment_fn(a: float, b: float) -> MomentFn:
    """Imaginary moments ``E[X^{jt}]`` of a Beta(a, b) variable."""

    def fn(t):
        t = np.asarray(t, dtype=float)
        z = 1j * t
        return np.exp(sp.loggamma(a + z) + sp.loggamma(a + b) - sp.loggamma(a) - sp.loggamma(a + b + z))

    return fn


# ------------------------------------------------------------- network curves

LINKS = ("total", "sbs", "sbs-access", "mbs", "backhaul")


def moment_supplier(engine: MomentEngine, link: str = "total"):
    """Moment function of the chosen link.

    ``total`` is the unconditional mixture over associations.  ``sbs`` is the
    dual-hop CSP of SBS-served devices, ``sbs-access`` the access hop alone
    and ``mbs`` the direct link, each conditioned on that association.
    ``backhaul`` is the SBS-MBS hop of a typical SBS.
    """
    if link not in LINKS:
        raise ValueError(f"link must be one of {LINKS}")
    if link == "total":
        return engine
    _, a2, a1, _ = engine.components(np.zeros(1))
    a1, a2 = float(a1[0].real), float(a2[0].real)

    def fn(b):
        arr = np.atleast_1d(np.asarray(b, dtype=complex))
        m_bh, m_acc, m_dir, _ = engine.components(arr)
        if link == "sbs":
            out = m_bh * m_acc / a2
        elif link == "sbs-access":
            out = m_acc / a2
        elif link == "mbs":
            out = m_dir / a1
        else:
            out = m_bh
        return out if np.ndim(b) else out[0]

    return fn


def _curve(fn, x_grid, method: Method, label, m1m2=None) -> MetaCurve:
    x_grid = tuple(float(x) for x in x_grid)
    if Method(method) is Method.GIL_PELAEZ:
        raw = gil_pelaez_curve(lambda t: fn(1j * np.asarray(t, dtype=float)), x_grid, clamp=False)
        ccdf = np.clip(raw, 0.0, 1.0)
        return MetaCurve(x_grid, tuple(ccdf.tolist()), Method.GIL_PELAEZ, label, tuple(raw.tolist()))
    if Method(method) is Method.BETA:
        m1, m2 = m1m2 if m1m2 is not None else np.real(np.atleast_1d(fn(np.array([1.0, 2.0]))))
        fit = beta_fit(float(m1), float(m2))
        return MetaCurve(x_grid, tuple(np.atleast_1d(beta_ccdf(fit, np.array(x_grid))).tolist()), Method.BETA, label)
    raise ValueError("empirical curves come from mcsim.empirical_meta")


def meta_sir(cfg: NetworkConfig, thetas: tuple[float, float], x_grid, method: Method = Method.BETA,
             variant: Variant = Variant.HYBRID, link: str = "total") -> MetaCurve:
    """Meta distribution of the SIR/SNR success probability at ``thetas = (theta2, theta_D)``."""
    eng = MomentEngine(cfg, thetas[0], thetas[1], variant=variant)
    return _curve(moment_supplier(eng, link), x_grid, method, tuple(thetas))


def meta_rate(cfg: NetworkConfig, rates: tuple[float, float, float], x_grid,
              method: Method = Method.BETA) -> MetaCurve:
    """Meta distribution of the rate-success probability for targets (T1, T2, TBH)."""
    th_bh, th_acc, th_dir = rate_thresholds(rates, cfg)
    eng = MomentEngine(cfg, th_bh, th_acc, th_dir)
    return _curve(eng, x_grid, method, tuple(rates))
