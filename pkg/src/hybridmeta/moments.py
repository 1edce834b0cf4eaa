"""Moments ``E[P_s^b]`` of the conditional success probability.

The hybrid network composes three links:

* backhaul: typical SBS to nearest MBS over the microwave band (SIR),
* access: device to SBS over mm-wave (SNR, Nakagami fading via the Alzer form),
* direct: device to MBS over the microwave band (SIR).

``M_T = M_BH * M_access + M_direct``.  Orders ``b`` may be complex and may
be passed as arrays; every function evaluates elementwise.

Two evaluation paths exist.  ``EvalPath.DIRECT`` integrates
``exp(b ln CSP)`` against the association densities with adaptive composite
Gauss-Legendre rules.  ``EvalPath.SERIES`` expands ``CSP^b`` in binomial
series (finite double sum for nonnegative integer ``b``, generalised
binomial otherwise) and integrates each term with scipy's adaptive
quadrature.  The two share only the model formulas, so their agreement is a
meaningful check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate

from . import _quadrature as q
from .association import _mbs_breaks_u, _sbs_void_log
from .errors import NonConvergence, QuadratureFailure
from .model import NetworkConfig, derive, derive_gain_ratios
from .specfun import SeriesControl, gauss_2f1

__all__ = [
    "Variant",
    "EvalPath",
    "MomentQuery",
    "MomentResult",
    "hyp_f",
    "moment_backhaul",
    "moment_access",
    "moment_direct",
    "moment_tier_uwave",
    "moment_mmwave_backhaul",
    "MomentEngine",
    "moment_total",
    "moment_total_uwave",
    "imaginary_moment",
    "mean_local_delay",
    "network_jitter",
    "rate_thresholds",
    "rate_moment",
    "alzer_log_csp",
    "exact_log_csp",
]

_HYP_CTRL = SeriesControl(max_terms=50_000, rel_tol=1e-13)
_ORDER = 16
_MAX_PANELS = 512
_ABS_TOL = 1e-12
_REL_TOL = 1e-10
# a negative moment whose integrand at the window edge is within this many
# nats of its peak is dominated by the window and reported as divergent
_EDGE_LOG = 30.0


class Variant(str, Enum):
    HYBRID = "hybrid"
    UWAVE = "uwave"
    MMWAVE_BACKHAUL = "mmwave-backhaul"
    MIXED = "mixed"


class EvalPath(str, Enum):
    SERIES = "series"
    DIRECT = "direct"


@dataclass(frozen=True)
class MomentQuery:
    order_b: complex
    theta_backhaul: float
    theta_device: float
    variant: Variant = Variant.HYBRID
    eval_path: EvalPath = EvalPath.DIRECT

    def __post_init__(self):
        b = complex(self.order_b)
        if not (math.isfinite(b.real) and math.isfinite(b.imag)):
            raise ValueError("order_b must be finite")
        if self.theta_backhaul < 0 or self.theta_device < 0:
            raise ValueError("thresholds must be nonnegative")


@dataclass(frozen=True)
class MomentResult:
    value: complex
    components: tuple[complex, complex, complex]
    diverged: bool = False
    pole: float | None = None

    @property
    def real(self) -> float:
        return float(np.real(self.value))


def _as_b(b):
    arr = np.atleast_1d(np.asarray(b, dtype=complex))
    return arr, np.ndim(b) == 0


def _finish(vals, scalar):
    vals = np.asarray(vals)
    if np.all(np.imag(vals) == 0):
        vals = np.real(vals)
    return vals[0] if scalar else vals


# ------------------------------------------------------------------ SIR links


def hyp_f(b, theta: float, alpha: float):
    """``2F1(b, -2/alpha; 1 - 2/alpha; -theta)`` (elementwise in ``b``)."""
    arr, scalar = _as_b(b)
    if theta == 0:
        return _finish(np.ones_like(arr), scalar)
    d = 2.0 / alpha
    return _finish(np.atleast_1d(gauss_2f1(arr, -d, 1.0 - d, -theta, _HYP_CTRL)), scalar)


def _hyp_f_pochhammer(b: complex, theta: float, alpha: float, ctrl: SeriesControl) -> complex:
    """Same function through the plain Pfaff series ``sum (b)_k / (1-d)_k w^k``.

    The rising factorials are accumulated term by term (no connection
    formula), so this is independent of :func:`hyp_f` for moderate ``theta``.
    """
    d = 2.0 / alpha
    w = theta / (1.0 + theta)
    total, k = 0.0 + 0.0j, 0
    quiet = 0
    term = 1.0 + 0.0j
    while k < ctrl.max_terms:
        if k > 0:
            term *= (b + k - 1) / (1.0 - d + k - 1) * w
        total += term
        quiet = quiet + 1 if abs(term) <= ctrl.rel_tol * max(abs(total), 1e-300) else 0
        if quiet >= 2:
            return complex(np.exp(-b * math.log1p(theta)) * total)
        k += 1
    raise NonConvergence(f"Pochhammer series at theta={theta} needs more than {ctrl.max_terms} terms")


def moment_backhaul(b, theta2: float, alpha1: float):
    """Backhaul moment ``1 / 2F1(b, -2/alpha1; 1 - 2/alpha1; -theta2)``.

    Real negative orders whose denominator is not positive diverge and are
    returned as ``inf``.  The value depends on neither the MBS density nor
    its power.
    """
    arr, scalar = _as_b(b)
    f = np.atleast_1d(hyp_f(arr, theta2, alpha1)).astype(complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 1.0 / f
    bad = (arr.imag == 0) & (f.real <= 0)
    out[bad] = np.inf
    return _finish(out, scalar)


def _backhaul_pole(alpha1: float) -> float:
    """theta2 at which the mean local delay of the backhaul diverges."""
    return (alpha1 - 2.0) / 2.0


def moment_tier_uwave(b, theta: float, k: int, cfg: NetworkConfig):
    """Per-tier moment in the microwave-only network (tier ``k`` in {1, 2}).

    ``1 / (lam_j/lam_k * (P_j B_j / (P_k B_k))^(2/alpha_j) + 2F1(b, -2/alpha_k; 1 - 2/alpha_k; -theta))``.
    The SBS tier uses ``ple_alpha2_nlos`` as its microwave exponent.
    """
    arr, scalar = _as_b(b)
    tiers = {
        1: (cfg.macro.density_lambda1, cfg.macro.power_p1 * cfg.macro.bias_b1, cfg.macro.ple_alpha1),
        2: (cfg.small.density_lambda2, cfg.small.power_p2 * cfg.small.bias_b2, cfg.small.ple_alpha2_nlos),
    }
    if k not in tiers:
        raise ValueError("tier index must be 1 or 2")
    lam_k, pb_k, alpha_k = tiers[k]
    lam_j, pb_j, alpha_j = tiers[3 - k]
    comp = (lam_j / lam_k) * (pb_j / pb_k) ** (2.0 / alpha_j) if lam_j > 0 else 0.0
    den = comp + np.atleast_1d(hyp_f(arr, theta, alpha_k)).astype(complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 1.0 / den
    out[(arr.imag == 0) & (den.real <= 0)] = np.inf
    return _finish(out, scalar)


# --------------------------------------------------------------- mm-wave SNR


def _zeta_alzer(m: int) -> float:
    return m * math.factorial(m) ** (-1.0 / m)


def alzer_log_csp(nu, m: int, omega: float = 1.0):
    """log of ``1 - (1 - exp(-zeta nu / omega))^m`` with ``zeta = m (m!)^(-1/m)``."""
    x = _zeta_alzer(m) * np.asarray(nu, dtype=float) / omega
    if m == 1:
        return -x
    qv = np.exp(-x)
    y = (-np.expm1(-x)) ** m
    small_y = np.log1p(-np.minimum(y, 0.5))
    # 1 - (1-q)^m = q * sum_{i=1}^m C(m,i) (-1)^(i+1) q^(i-1); stable when q is small
    poly = np.zeros_like(qv)
    for i in range(m, 0, -1):
        poly = poly * qv + math.comb(m, i) * (-1) ** (i + 1)
    large_x = -x + np.log(np.maximum(poly, 1e-300))
    return np.where(y <= 0.5, small_y, large_x)


def exact_log_csp(nu, m: int, omega: float = 1.0):
    """log of the gamma survival ``Gamma(m, m nu / omega) / Gamma(m)``."""
    x = m * np.asarray(nu, dtype=float) / omega
    term = np.ones_like(x)
    acc = np.ones_like(x)
    for k in range(1, m):
        term = term * x / k
        acc = acc + term
    return -x + np.log(acc)


@dataclass(frozen=True)
class _LinkClass:
    lo: float
    hi: float
    alpha: float
    m: int
    omega: float
    p: float
    log_coef: float  # log(pi lam p)
    exclusion_rate: float  # coefficient of u in the same-tier void exponent
    offset: float  # constant part of the void exponent
    competitor: float  # coefficient c in -c u^(alpha/alpha1) for the other tier
    at_window_edge: bool


class _MmWaveLink:
    """Serving mm-wave link drawn from a LOS-ball PPP with optional competing tier.

    Each class (LOS, NLOS) contributes ``int W(u) (p C(u))^b du`` over its
    ``u = r^2`` support, where ``W`` is the association density and ``C`` the
    success probability of the link.
    """

    def __init__(self, cfg: NetworkConfig, *, lam: float, power: float, gain: float, theta: float,
                 competitor_coef: float, alpha1: float, fading: str = "alzer"):
        der = derive(cfg)
        mm = cfg.mmwave
        near = der.zeta2 if cfg.access_nu_near_field else 1.0
        self.nu0 = theta * der.noise_sigma2 / (power * gain * near)
        self.fading = fading
        d2 = mm.los_ball_d**2
        R2 = cfg.radius**2
        al, an = cfg.small.ple_alpha2_los, cfg.small.ple_alpha2_nlos
        classes = []
        if mm.p_los > 0 and lam > 0:
            classes.append(_LinkClass(0.0, min(d2, R2), al, mm.m_los, mm.omega_los, mm.p_los,
                                      math.log(math.pi * lam * mm.p_los), math.pi * lam * mm.p_los, 0.0,
                                      competitor_coef, R2 <= d2))
        if mm.p_nlos > 0 and lam > 0 and R2 > d2:
            classes.append(_LinkClass(d2, R2, an, mm.m_nlos, mm.omega_nlos, mm.p_nlos,
                                      math.log(math.pi * lam * mm.p_nlos), math.pi * lam * mm.p_nlos,
                                      math.pi * lam * (mm.p_los - mm.p_nlos) * d2, competitor_coef, True))
        self.classes = classes
        self.alpha1 = alpha1
        self._panels = {i: 4 for i in range(len(classes))}

    def log_weight(self, u, c: _LinkClass):
        u = np.asarray(u, dtype=float)
        out = c.log_coef - c.exclusion_rate * u - c.offset
        if c.competitor:
            out = out - c.competitor * np.power(u, c.alpha / self.alpha1)
        return out

    def log_csp(self, u, c: _LinkClass):
        nu = self.nu0 * np.power(np.asarray(u, dtype=float), c.alpha / 2.0)
        if self.fading == "exact":
            return exact_log_csp(nu, c.m, c.omega)
        return alzer_log_csp(nu, c.m, c.omega)

    def _class_moment(self, i: int, c: _LinkClass, b: np.ndarray):
        logp = math.log(c.p)

        def log_f(u):
            return self.log_weight(u, c)[None, :] + b.real[:, None] * (self.log_csp(u, c)[None, :] + logp)

        upper, _ = q.effective_upper(c.lo, c.hi, log_f)
        probe = np.array([c.lo + (c.hi - c.lo) * s for s in np.geomspace(1e-9, 1.0, 400)])
        lf = log_f(probe)
        edge_hot = lf[:, -1] > lf.max(axis=1) - _EDGE_LOG
        diverged = edge_hot & (b.real < 0) & c.at_window_edge

        def evaluate(panels):
            # integrate in r = sqrt(u): the other-tier term u^(alpha/alpha1) is smooth there
            r, wr = q.composite_rule([math.sqrt(c.lo), math.sqrt(upper)], panels, _ORDER)
            nodes, weights = r * r, 2.0 * r * wr
            lw = self.log_weight(nodes, c)
            lc = self.log_csp(nodes, c) + logp
            # negative orders may overflow where the CSP vanishes; those are flagged as diverged
            with np.errstate(over="ignore", invalid="ignore"):
                return np.exp(lw[None, :] + b[:, None] * lc[None, :]) @ weights

        panels = self._panels[i]
        coarse = evaluate(panels)
        while True:
            fine = evaluate(2 * panels)
            ok = np.abs(fine - coarse) <= _ABS_TOL + _REL_TOL * np.abs(fine)
            ok |= diverged | ~np.isfinite(fine)
            if np.all(ok):
                self._panels[i] = panels
                return fine, diverged
            panels *= 2
            if panels > _MAX_PANELS:
                err = float(np.max(np.abs(fine - coarse)[~ok]))
                raise QuadratureFailure("mm-wave link integral did not settle", err)
            coarse = fine

    def moment(self, b):
        """Vectorised moment; returns (values, diverged mask)."""
        arr = np.atleast_1d(np.asarray(b, dtype=complex))
        total = np.zeros(arr.shape, dtype=complex)
        div = np.zeros(arr.shape, dtype=bool)
        for i, c in enumerate(self.classes):
            v, dv = self._class_moment(i, c, arr)
            total += v
            div |= dv
        total[div] = np.inf
        return total, div

    # ---- series path

    def _class_weight_fn(self, c: _LinkClass):
        return lambda u: np.exp(self.log_weight(u, c))

    def _class_upper(self, c: _LinkClass, b_real: float) -> float:
        def log_f(u):
            return self.log_weight(u, c) + b_real * self.log_csp(u, c)

        return q.effective_upper(c.lo, c.hi, log_f)[0]

    def _quad_class(self, fn, c: _LinkClass, upper: float):
        pts = [c.lo + k / c.exclusion_rate for k in (1, 5, 20)] if c.exclusion_rate > 0 else None
        return q.quad(fn, c.lo, upper, points=pts, epsrel=1e-12, epsabs=1e-15)[0]

    def series_moment(self, b: complex, ctrl: SeriesControl) -> complex:
        """Binomial-series evaluation of the same moment (scalar ``b``)."""
        b = complex(b)
        is_nat = b.imag == 0 and b.real >= 0 and b.real == round(b.real)
        total = 0.0 + 0.0j
        for c in self.classes:
            weight = self._class_weight_fn(c)
            zeta = _zeta_alzer(c.m)
            pb = c.p**b
            upper = self._class_upper(c, b.real)
            if is_nat and self.fading == "alzer":
                n = int(round(b.real))
                acc = 0.0
                for k in range(n + 1):
                    inner = 0.0
                    for kk in range(c.m * k + 1):
                        def fn(u, kk=kk):
                            nu = self.nu0 * u ** (c.alpha / 2.0)
                            return float(weight(u)) * math.exp(-zeta * kk * nu / c.omega)

                        inner += math.comb(c.m * k, kk) * (-1) ** kk * self._quad_class(fn, c, upper)
                    acc += math.comb(n, k) * (-1) ** k * inner
                total += pb * acc
                continue
            total += pb * self._generalised_series(b, c, weight, upper, ctrl)
        return total

    def _generalised_series(self, b, c, weight, upper, ctrl: SeriesControl):
        """sum_k binom(b, k) (-1)^k int W y^k du with y = 1 - C (Alzer: (1 - e^{-zeta nu})^m)."""
        K = ctrl.max_terms
        ks = np.arange(K + 1)

        def y_of(u):
            return -np.expm1(self.log_csp(u, c))

        def vec(u):
            return float(weight(u)) * np.power(y_of(u), ks)

        pts = [c.lo + k / c.exclusion_rate for k in (1, 5, 20)] if c.exclusion_rate > 0 else None
        moments, err = integrate.quad_vec(vec, c.lo, upper, epsabs=1e-16, epsrel=1e-12, points=pts, limit=400)
        coef = 1.0 + 0.0j
        acc = 0.0 + 0.0j
        quiet = 0
        for k in range(K + 1):
            if k > 0:
                coef *= (k - 1 - b) / k  # binom(b,k)(-1)^k recursively
            term = coef * moments[k]
            acc += term
            quiet = quiet + 1 if abs(term) <= ctrl.rel_tol * max(abs(acc), 1e-300) else 0
            if quiet >= 3:
                return acc
        raise NonConvergence(f"binomial series for b={b} did not settle within {K} terms")


def _access_link(cfg: NetworkConfig, theta: float, fading: str = "alzer") -> _MmWaveLink:
    der = derive(cfg)
    lam1, alpha1 = cfg.macro.density_lambda1, cfg.macro.ple_alpha1
    return _MmWaveLink(
        cfg,
        lam=cfg.small.density_lambda2,
        power=cfg.small.power_p2,
        gain=cfg.small.n_antenna_elements * cfg.device.gain_gd_max,
        theta=theta,
        competitor_coef=math.pi * lam1 * der.a_bar ** (2.0 / alpha1),
        alpha1=alpha1,
        fading=fading,
    )


def _mm_backhaul_link(cfg: NetworkConfig, theta: float, fading: str = "alzer") -> _MmWaveLink:
    der = derive(cfg)
    return _MmWaveLink(
        cfg,
        lam=cfg.macro.density_lambda1,
        power=cfg.macro.power_p1,
        gain=cfg.macro.gain_g1_omni * der.g2_max,
        theta=theta,
        competitor_coef=0.0,
        alpha1=cfg.macro.ple_alpha1,
        fading=fading,
    )


def moment_access(b, theta_d: float, cfg: NetworkConfig, eval_path: EvalPath = EvalPath.DIRECT,
                  fading: str = "alzer", ctrl: SeriesControl = SeriesControl(max_terms=512)):
    """Access-link moment summed over LOS and NLOS SBS association."""
    link = _access_link(cfg, theta_d, fading)
    if EvalPath(eval_path) is EvalPath.SERIES:
        arr, scalar = _as_b(b)
        return _finish(np.array([link.series_moment(x, ctrl) for x in arr]), scalar)
    arr, scalar = _as_b(b)
    return _finish(link.moment(arr)[0], scalar)


def moment_mmwave_backhaul(b, theta2: float, cfg: NetworkConfig, fading: str = "alzer"):
    """Backhaul moment when the SBS-MBS hop runs over mm-wave (noise limited)."""
    arr, scalar = _as_b(b)
    return _finish(_mm_backhaul_link(cfg, theta2, fading).moment(arr)[0], scalar)


# ------------------------------------------------------------------ direct


class _DirectLink:
    """Device served by its nearest MBS: ``int pi lam1 A1bar(u) exp(-pi lam1 u F(b)) du``."""

    def __init__(self, cfg: NetworkConfig, theta: float):
        self.cfg = cfg
        self.theta = theta
        self.lam1 = cfg.macro.density_lambda1
        self.alpha1 = cfg.macro.ple_alpha1
        self.a_hat = derive_gain_ratios(cfg)[0]
        self.R2 = cfg.radius**2
        self.breaks = [x for x in _mbs_breaks_u(cfg, self.a_hat) if x < self.R2]
        self._panels = 4

    def log_a1bar(self, u):
        return _sbs_void_log(self.a_hat * np.power(np.asarray(u, dtype=float), self.alpha1 / 2.0), self.cfg)

    def _grid(self, lo, hi, panels):
        x, w = q._leggauss(_ORDER)
        pe = np.linspace(0.0, 1.0, panels + 1)
        half = 0.5 * np.diff(pe)
        mid = 0.5 * (pe[:-1] + pe[1:])
        frac = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        wfrac = (half[:, None] * w[None, :]).ravel()
        span = (hi - lo)[:, None]
        return lo[:, None] + span * frac[None, :], span * wfrac[None, :]

    def moment(self, b):
        arr = np.atleast_1d(np.asarray(b, dtype=complex))
        f = np.atleast_1d(hyp_f(arr, self.theta, self.alpha1)).astype(complex)
        c = math.pi * self.lam1 * f
        probe = self.R2 * np.concatenate(([0.0], np.geomspace(1e-12, 1.0, 600)))
        lf = self.log_a1bar(probe)[None, :] - c.real[:, None] * probe[None, :]
        peak = lf.max(axis=1)
        alive = lf >= (peak - q.LOG_NEGLIGIBLE)[:, None]
        last = alive.shape[1] - 1 - np.argmax(alive[:, ::-1], axis=1)
        upper = np.where(last == len(probe) - 1, self.R2, probe[np.minimum(last + 1, len(probe) - 1)])
        diverged = (arr.imag == 0) & (arr.real < 0) & (lf[:, -1] > peak - _EDGE_LOG)

        edges = [np.zeros_like(upper)]
        for br in self.breaks:
            edges.append(np.minimum(br, upper))
        edges.append(upper)

        def evaluate(panels):
            out = np.zeros(arr.shape, dtype=complex)
            for lo, hi in zip(edges[:-1], edges[1:]):
                nodes, weights = self._grid(lo, hi, panels)
                la = self.log_a1bar(nodes)
                out += np.sum(weights * np.exp(la - c[:, None] * nodes), axis=1)
            return math.pi * self.lam1 * out

        panels = self._panels
        coarse = evaluate(panels)
        while True:
            fine = evaluate(2 * panels)
            ok = (np.abs(fine - coarse) <= _ABS_TOL + _REL_TOL * np.abs(fine)) | diverged
            if np.all(ok):
                self._panels = panels
                fine[diverged] = np.inf
                return fine, diverged
            panels *= 2
            if panels > _MAX_PANELS:
                raise QuadratureFailure("direct-link integral did not settle",
                                        float(np.max(np.abs(fine - coarse)[~ok])))
            coarse = fine

    def series_moment(self, b: complex, ctrl: SeriesControl) -> complex:
        """Same integral with F from the Pochhammer series and scipy quadrature."""
        f = _hyp_f_pochhammer(complex(b), self.theta, self.alpha1, ctrl) if self.theta > 0 else 1.0
        c = math.pi * self.lam1 * f
        upper = q.effective_upper(0.0, self.R2, lambda u: self.log_a1bar(u) - c.real * u)[0]
        edges = [0.0, *[x for x in self.breaks if x < upper], upper]
        re = im = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            def g(u, part):
                v = math.pi * self.lam1 * np.exp(self.log_a1bar(u) - c * u)
                return float(v.real if part == 0 else v.imag)

            re += q.quad(lambda u: g(u, 0), lo, hi, epsrel=1e-12, epsabs=1e-15)[0]
            im += q.quad(lambda u: g(u, 1), lo, hi, epsrel=1e-12, epsabs=1e-15)[0]
        return complex(re, im)


def moment_direct(b, theta_d: float, cfg: NetworkConfig, eval_path: EvalPath = EvalPath.DIRECT,
                  ctrl: SeriesControl = SeriesControl(max_terms=4096)):
    """Moment of the direct MBS link weighted by MBS association."""
    link = _DirectLink(cfg, theta_d)
    arr, scalar = _as_b(b)
    if EvalPath(eval_path) is EvalPath.SERIES:
        return _finish(np.array([link.series_moment(x, ctrl) for x in arr]), scalar)
    return _finish(link.moment(arr)[0], scalar)


# ------------------------------------------------------------------- totals


class MomentEngine:
    """Reusable evaluator of ``M_T(b)`` for fixed thresholds, config and variant.

    Keeps the quadrature grids between calls, which matters when the
    Gil-Pelaez integrator requests thousands of imaginary orders.
    """

    def __init__(self, cfg: NetworkConfig, theta_backhaul: float, theta_access: float,
                 theta_direct: float | None = None, variant: Variant = Variant.HYBRID,
                 fading: str = "alzer"):
        self.cfg = cfg
        self.variant = Variant(variant)
        self.theta_backhaul = theta_backhaul
        self.theta_access = theta_access
        self.theta_direct = theta_access if theta_direct is None else theta_direct
        v = self.variant
        self._mm_bh = _mm_backhaul_link(cfg, theta_backhaul, fading) if v in (
            Variant.MMWAVE_BACKHAUL, Variant.MIXED) else None
        self._access = _access_link(cfg, theta_access, fading) if v in (
            Variant.HYBRID, Variant.MMWAVE_BACKHAUL) else None
        self._direct = _DirectLink(cfg, self.theta_direct) if self._access is not None else None

    def components(self, b):
        """(m_backhaul, m_access, m_direct, diverged) arrays for orders ``b``."""
        arr = np.atleast_1d(np.asarray(b, dtype=complex))
        cfg = self.cfg
        if self._mm_bh is not None:
            m_bh, _ = self._mm_bh.moment(arr)
        else:
            m_bh = np.atleast_1d(moment_backhaul(arr, self.theta_backhaul, cfg.macro.ple_alpha1)).astype(complex)
        if self._access is not None:
            m_acc, _ = self._access.moment(arr)
            m_dir, _ = self._direct.moment(arr)
        else:
            m_acc = np.atleast_1d(moment_tier_uwave(arr, self.theta_access, 2, cfg)).astype(complex)
            m_dir = np.atleast_1d(moment_tier_uwave(arr, self.theta_direct, 1, cfg)).astype(complex)
        div = ~np.isfinite(m_bh) | ~np.isfinite(m_acc) | ~np.isfinite(m_dir)
        return m_bh, m_acc, m_dir, div

    def __call__(self, b):
        arr, scalar = _as_b(b)
        m_bh, m_acc, m_dir, div = self.components(arr)
        with np.errstate(invalid="ignore"):
            tot = m_bh * m_acc + m_dir
        tot[div] = np.inf
        return _finish(tot, scalar)

    def result(self, b: complex) -> MomentResult:
        m_bh, m_acc, m_dir, div = self.components(np.array([b]))
        value = np.inf if div[0] else m_bh[0] * m_acc[0] + m_dir[0]
        pole = None
        if div[0] and self._mm_bh is None and not np.isfinite(m_bh[0]):
            pole = _backhaul_pole(self.cfg.macro.ple_alpha1) if complex(b) == -1 else None
        return MomentResult(value=value, components=(m_bh[0], m_acc[0], m_dir[0]), diverged=bool(div[0]), pole=pole)


def _series_total(qry: MomentQuery, cfg: NetworkConfig) -> MomentResult:
    b = complex(qry.order_b)
    ctrl = SeriesControl(max_terms=512)
    alpha1 = cfg.macro.ple_alpha1
    f_bh = _hyp_f_pochhammer(b, qry.theta_backhaul, alpha1, SeriesControl(max_terms=4096)) \
        if qry.theta_backhaul > 0 else 1.0
    m_bh = np.inf if (b.imag == 0 and f_bh.real <= 0) else 1.0 / f_bh
    if qry.variant in (Variant.MMWAVE_BACKHAUL, Variant.MIXED):
        m_bh = _mm_backhaul_link(cfg, qry.theta_backhaul).series_moment(b, ctrl)
    if qry.variant in (Variant.HYBRID, Variant.MMWAVE_BACKHAUL):
        m_acc = _access_link(cfg, qry.theta_device).series_moment(b, ctrl)
        m_dir = _DirectLink(cfg, qry.theta_device).series_moment(b, SeriesControl(max_terms=4096))
    else:
        m_acc = complex(moment_tier_uwave(b, qry.theta_device, 2, cfg))
        m_dir = complex(moment_tier_uwave(b, qry.theta_device, 1, cfg))
    div = not (np.isfinite(m_bh) and np.isfinite(m_acc) and np.isfinite(m_dir))
    value = np.inf if div else m_bh * m_acc + m_dir
    return MomentResult(value=value, components=(m_bh, m_acc, m_dir), diverged=div)


def moment_total(qry: MomentQuery, cfg: NetworkConfig) -> MomentResult:
    """``M_b,T = M_b,BH * M_b,access + M_b,direct`` for the query's variant."""
    if EvalPath(qry.eval_path) is EvalPath.SERIES:
        return _series_total(qry, cfg)
    eng = MomentEngine(cfg, qry.theta_backhaul, qry.theta_device, variant=qry.variant)
    return eng.result(qry.order_b)


def moment_total_uwave(b, thetas: tuple[float, float], cfg: NetworkConfig) -> MomentResult:
    """Microwave-only network: ``M_BH * M_2' + M_1'``."""
    return moment_total(MomentQuery(b, thetas[0], thetas[1], Variant.UWAVE), cfg)


def imaginary_moment(t, thetas: tuple[float, float], cfg: NetworkConfig,
                     variant: Variant = Variant.HYBRID):
    """``M_{jt,T}`` for real ``t`` (array or scalar)."""
    eng = MomentEngine(cfg, thetas[0], thetas[1], variant=variant)
    return eng(1j * np.asarray(t, dtype=float))


def mean_local_delay(thetas: tuple[float, float], cfg: NetworkConfig,
                     variant: Variant = Variant.HYBRID) -> MomentResult:
    """Mean number of transmission attempts, ``M_{-1,T}``."""
    res = MomentEngine(cfg, thetas[0], thetas[1], variant=variant).result(-1.0)
    if res.diverged and res.pole is None and variant in (Variant.HYBRID, Variant.UWAVE):
        if thetas[0] >= _backhaul_pole(cfg.macro.ple_alpha1):
            res = MomentResult(res.value, res.components, True, _backhaul_pole(cfg.macro.ple_alpha1))
    return res


def network_jitter(thetas: tuple[float, float], cfg: NetworkConfig,
                   variant: Variant = Variant.HYBRID) -> tuple[float, bool]:
    """Variance of the local delay ``M_{-2} - M_{-1}^2`` and a divergence flag."""
    eng = MomentEngine(cfg, thetas[0], thetas[1], variant=variant)
    m = np.atleast_1d(eng(np.array([-1.0, -2.0])))
    if not np.all(np.isfinite(m)):
        return math.inf, True
    return float(max(m[1].real - m[0].real ** 2, 0.0)), False


def rate_thresholds(rates: tuple[float, float, float], cfg: NetworkConfig) -> tuple[float, float, float]:
    """SIR/SNR thresholds (backhaul, access, direct) for rate targets (T1, T2, TBH)."""
    t1, t2, tbh = rates
    eta = cfg.uwave.access_fraction_eta
    w1, w2 = cfg.uwave.bandwidth_w1, cfg.mmwave.bandwidth_w2

    def thr(rate, bw):
        if rate == 0:
            return 0.0
        if bw <= 0:
            return math.inf
        return math.expm1(rate / bw * math.log(2.0))

    return thr(tbh, (1.0 - eta) * w1), thr(t2, w2), thr(t1, eta * w1)


def rate_moment(b, rates: tuple[float, float, float], cfg: NetworkConfig):
    """Moment of the rate-success probability for targets (T1, T2, TBH)."""
    th_bh, th_acc, th_dir = rate_thresholds(rates, cfg)
    return MomentEngine(cfg, th_bh, th_acc, th_dir)(b)
