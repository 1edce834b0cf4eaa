"""Tier association of the typical device under biased received power.

Path losses are handled through ``u = r^2`` (so ``l = u^(alpha/2)``), which
turns every void probability into an exponential of a power of ``u``.  The
SBS class is LOS for ``r <= d`` and NLOS beyond; the MBS tier is the nearest
macro station.

Unconditional probabilities are integrated over ``u`` in ``[0, R^2]`` where
``R`` is the configuration's window radius, so analytic results and the
Monte Carlo disc describe the same finite network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy import special as sp

from . import _quadrature as q
from .errors import DomainError, PreconditionError
from .model import NetworkConfig, derive_gain_ratios
from .specfun import kummer_1f1

__all__ = [
    "AssocProbabilities",
    "assoc_density_los",
    "assoc_density_nlos",
    "los_weight_u",
    "nlos_weight_u",
    "mbs_win_prob",
    "cond_assoc_sbs",
    "assoc_probs",
    "a1_three_piece",
    "closed_form_a1",
    "a1_large_bias_limit",
    "asymptotic_assoc",
]


@dataclass(frozen=True)
class AssocProbabilities:
    a1: float
    a2_los: float
    a2_nlos: float
    error_estimate: float = 0.0

    @property
    def a2(self) -> float:
        return self.a2_los + self.a2_nlos

    @property
    def total(self) -> float:
        return self.a1 + self.a2_los + self.a2_nlos


def _mbs_exclusion_log(u, cfg: NetworkConfig, alpha_l: float, a_bar: float):
    """log P(no MBS beats an SBS at u = r^2 with exponent alpha_l)."""
    lam1, alpha1 = cfg.macro.density_lambda1, cfg.macro.ple_alpha1
    return -math.pi * lam1 * a_bar ** (2.0 / alpha1) * np.power(u, alpha_l / alpha1)


def los_weight_u(u, cfg: NetworkConfig, a_bar: float | None = None):
    """LOS association density in ``u``: P(serving SBS is LOS at r^2 in du) / du."""
    if a_bar is None:
        a_bar = derive_gain_ratios(cfg)[1]
    lam2, pl = cfg.small.density_lambda2, cfg.mmwave.p_los
    u = np.asarray(u, dtype=float)
    logw = _mbs_exclusion_log(u, cfg, cfg.small.ple_alpha2_los, a_bar) - math.pi * lam2 * pl * u
    return math.pi * lam2 * pl * np.exp(logw)


def nlos_weight_u(u, cfg: NetworkConfig, a_bar: float | None = None):
    """NLOS association density in ``u`` for ``u >= d^2``."""
    if a_bar is None:
        a_bar = derive_gain_ratios(cfg)[1]
    lam2, pl, pn = cfg.small.density_lambda2, cfg.mmwave.p_los, cfg.mmwave.p_nlos
    d2 = cfg.mmwave.los_ball_d ** 2
    u = np.asarray(u, dtype=float)
    logw = _mbs_exclusion_log(u, cfg, cfg.small.ple_alpha2_nlos, a_bar) - math.pi * lam2 * (
        pl * d2 + pn * (u - d2)
    )
    return math.pi * lam2 * pn * np.exp(logw)


def assoc_density_los(l, cfg: NetworkConfig):
    """LOS association density in the path-loss variable ``l`` on (0, d^alpha_L]."""
    al = cfg.small.ple_alpha2_los
    l = np.asarray(l, dtype=float)
    if np.any(l <= 0) or np.any(l > cfg.mmwave.los_ball_d ** al * (1 + 1e-12)):
        raise DomainError("LOS path loss must lie in (0, d^alpha_L]")
    u = l ** (2.0 / al)
    # du/dl = (2/al) l^(2/al - 1)
    return los_weight_u(u, cfg) * (2.0 / al) * l ** (2.0 / al - 1.0)


def assoc_density_nlos(l, cfg: NetworkConfig):
    """NLOS association density in ``l`` on [d^alpha_N, inf)."""
    an = cfg.small.ple_alpha2_nlos
    l = np.asarray(l, dtype=float)
    if np.any(l < cfg.mmwave.los_ball_d ** an * (1 - 1e-12)):
        raise DomainError("NLOS path loss must be at least d^alpha_N")
    u = l ** (2.0 / an)
    return nlos_weight_u(u, cfg) * (2.0 / an) * l ** (2.0 / an - 1.0)


def _sbs_void_log(L, cfg: NetworkConfig):
    """log P(no SBS has path loss below L), piecewise over the LOS/NLOS ranges."""
    lam2, pl, pn = cfg.small.density_lambda2, cfg.mmwave.p_los, cfg.mmwave.p_nlos
    d = cfg.mmwave.los_ball_d
    al, an = cfg.small.ple_alpha2_los, cfg.small.ple_alpha2_nlos
    L = np.asarray(L, dtype=float)
    lo, hi = d**al, d**an
    los_part = np.minimum(np.power(np.minimum(L, lo), 2.0 / al), d * d)
    nlos_part = np.where(L > hi, np.power(np.maximum(L, hi), 2.0 / an) - d * d, 0.0)
    return -math.pi * lam2 * (pl * los_part + pn * nlos_part)


def mbs_win_prob(l1, cfg: NetworkConfig, a_hat: float | None = None):
    """Probability that the MBS wins given its minimum path loss ``l1``.

    The competing SBS must have path loss above ``a_hat * l1``; this is the
    SBS void probability evaluated in the branch that ``a_hat * l1`` falls in.
    """
    if a_hat is None:
        a_hat = derive_gain_ratios(cfg)[0]
    return np.exp(_sbs_void_log(a_hat * np.asarray(l1, dtype=float), cfg))


def cond_assoc_sbs(l1, cfg: NetworkConfig):
    """Conditional probability of SBS association given MBS path loss ``l1``."""
    return 1.0 - mbs_win_prob(l1, cfg)


def _mbs_breaks_u(cfg: NetworkConfig, a_hat: float) -> list[float]:
    """u1 = r1^2 values where a_hat * l1 crosses d^alpha_L and d^alpha_N."""
    d, a1 = cfg.mmwave.los_ball_d, cfg.macro.ple_alpha1
    al, an = cfg.small.ple_alpha2_los, cfg.small.ple_alpha2_nlos
    return sorted(((d**x) / a_hat) ** (2.0 / a1) for x in (al, an))


def a1_three_piece(cfg: NetworkConfig) -> float:
    """MBS association probability from the l1-integral of the MBS-win probability."""
    a_hat = derive_gain_ratios(cfg)[0]
    lam1, alpha1 = cfg.macro.density_lambda1, cfg.macro.ple_alpha1
    R2 = cfg.radius**2

    def f(u1):
        return math.pi * lam1 * math.exp(-math.pi * lam1 * u1) * float(mbs_win_prob(u1 ** (alpha1 / 2.0), cfg, a_hat))

    breaks = [b for b in _mbs_breaks_u(cfg, a_hat) if b < R2]
    total = 0.0
    edges = [0.0, *breaks, R2]
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += q.quad(f, lo, hi, points=[lo + (hi - lo) * s for s in (1e-4, 1e-2)])[0]
    return total


def _decay_points(weight, lo: float, hi: float, drops=(1.0, 5.0, 20.0, 60.0)) -> list[float]:
    """Where ``log weight`` has fallen by each of ``drops`` below its value at ``lo``.

    Both class weights are log-decreasing, so each crossing is unique.  These
    become quadrature breakpoints at the true decay scale, which may be set by
    either tier.
    """
    def logw(u):
        return math.log(max(float(weight(u)), 1e-300))

    top = logw(lo)
    end = top - logw(hi) if math.isfinite(hi) else math.inf
    pts = []
    for k in drops:
        if end <= k:
            break
        upper = hi if math.isfinite(hi) else max(2.0 * lo, 1.0)
        while not math.isfinite(hi) and top - logw(upper) < k:
            upper *= 2.0
        pts.append(optimize.brentq(lambda u: top - logw(u) - k, lo, upper, xtol=1e-9 * upper))
    return pts


def _class_integral(weight, lo: float, hi: float) -> tuple[float, float]:
    if not hi > lo:
        return 0.0, 0.0
    return q.quad(lambda u: float(weight(u)), lo, hi, points=_decay_points(weight, lo, hi))


def assoc_probs(cfg: NetworkConfig) -> AssocProbabilities:
    """Association probabilities by adaptive quadrature of the LOS/NLOS densities."""
    a_bar = derive_gain_ratios(cfg)[1]
    d2 = cfg.mmwave.los_ball_d ** 2
    R2 = cfg.radius**2
    a2l, e1 = _class_integral(lambda u: los_weight_u(u, cfg, a_bar), 0.0, min(d2, R2))
    a2n, e2 = _class_integral(lambda u: nlos_weight_u(u, cfg, a_bar), d2, R2)
    return AssocProbabilities(a1=1.0 - a2l - a2n, a2_los=a2l, a2_nlos=a2n, error_estimate=e1 + e2)


def _require_standard_exponents(cfg: NetworkConfig) -> None:
    if (cfg.macro.ple_alpha1, cfg.small.ple_alpha2_los, cfg.small.ple_alpha2_nlos) != (4.0, 2.0, 4.0):
        raise PreconditionError("closed forms need alpha1 = 4, alpha_L = 2, alpha_N = 4")


def closed_form_a1(cfg: NetworkConfig) -> float:
    """Closed-form MBS association probability for exponents (4, 2, 4).

    Evaluates the three pieces of the l1-integral in terms of ``s = r1^2``:
    a Gaussian piece (erf difference, written with erfcx for stability), an
    exponential piece on the flat middle range and an exponential tail.
    """
    _require_standard_exponents(cfg)
    a_hat = derive_gain_ratios(cfg)[0]
    lam1, lam2 = cfg.macro.density_lambda1, cfg.small.density_lambda2
    pl, pn, d = cfg.mmwave.p_los, cfg.mmwave.p_nlos, cfg.mmwave.los_ball_d
    s1, s2 = d / math.sqrt(a_hat), d * d / math.sqrt(a_hat)
    zl = math.pi * pl * lam2 * d * d

    # piece 1: int_0^s1 pi lam1 exp(-pi lam1 s - k s^2) ds with k = pi lam2 pL a_hat
    k = math.pi * lam2 * pl * a_hat
    if k > 0:
        x1 = math.pi * lam1 / (2.0 * math.sqrt(k))
        x2 = x1 + math.sqrt(k) * s1
        diff = sp.erfcx(x1) - math.exp(x1 * x1 - x2 * x2) * sp.erfcx(x2)
        piece1 = math.pi * lam1 * math.sqrt(math.pi) / (2.0 * math.sqrt(k)) * diff
    else:
        piece1 = 1.0 - math.exp(-math.pi * lam1 * s1)
    piece2 = math.exp(-zl) * (math.exp(-math.pi * lam1 * s1) - math.exp(-math.pi * lam1 * s2))
    c1 = math.pi * (lam1 + math.sqrt(a_hat) * pn * lam2)
    piece3 = math.pi * lam1 / c1 * math.exp(math.pi * lam2 * (pn - pl) * d * d - c1 * s2)
    return piece1 + piece2 + piece3


def a1_large_bias_limit(cfg: NetworkConfig) -> float:
    """Leading term of the closed-form MBS probability as ``a_hat`` grows.

    ``A1 ~ (pi lam1 / sqrt(a_hat)) [erf(sqrt(zL)) / (2 sqrt(pL lam2))
    + exp(-zL) (d^2 - d) + exp(-zL) / (pi pN lam2)]``.
    """
    _require_standard_exponents(cfg)
    a_hat = derive_gain_ratios(cfg)[0]
    lam1, lam2 = cfg.macro.density_lambda1, cfg.small.density_lambda2
    pl, pn, d = cfg.mmwave.p_los, cfg.mmwave.p_nlos, cfg.mmwave.los_ball_d
    zl = math.pi * pl * lam2 * d * d
    bracket = (
        math.erf(math.sqrt(zl)) / (2.0 * math.sqrt(pl * lam2))
        + math.exp(-zl) * (d * d - d)
        + math.exp(-zl) / (math.pi * pn * lam2)
    )
    return math.pi * lam1 / math.sqrt(a_hat) * bracket


def asymptotic_assoc(cfg: NetworkConfig) -> tuple[float, float]:
    """LOS/NLOS SBS association probabilities when the MBS tier never wins.

    The NLOS term uses ``1F1(1; 2; -zN)``, i.e. a negative argument, so that
    the two probabilities sum to one.
    """
    _require_standard_exponents(cfg)
    lam2, d = cfg.small.density_lambda2, cfg.mmwave.los_ball_d
    zl = math.pi * cfg.mmwave.p_los * d * d * lam2
    zn = math.pi * cfg.mmwave.p_nlos * d * d * lam2
    a2l = -math.expm1(-zl)
    a2n = math.exp(zn - zl) * (1.0 - zn * kummer_1f1(1.0, 2.0, -zn))
    return a2l, a2n
