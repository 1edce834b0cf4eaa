"""Monte Carlo oracle: point-process realizations with analytically averaged fading.

Every realization draws from its own Philox stream keyed by ``(seed, index)``,
so results do not depend on how realizations are grouped into batches or
spread over worker processes.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from enum import Enum
from typing import Sequence

import numpy as np

from .metadist import Method, MetaCurve
from .model import NetworkConfig, derive
from .moments import Variant
from .specfun import upper_gamma_ratio

__all__ = [
    "AssocLabel",
    "Direct",
    "DualHop",
    "Realization",
    "CspSample",
    "SampleSet",
    "EmptyTier",
    "stream",
    "sample_realization",
    "csp_direct",
    "csp_backhaul",
    "csp_access",
    "csp_access_uwave",
    "csp_backhaul_mmwave",
    "run",
    "run_many",
    "empirical_meta",
    "empirical_moment",
    "empirical_variance",
    "brute_force_success",
]

_EMPTY_WARN_FRACTION = 1e-3
_MAX_RETRIES = 1000
_MAX_EXPECTED_POINTS = 5e6


class AssocLabel(str, Enum):
    MBS = "MBS"
    SBS_LOS = "SbsLos"
    SBS_NLOS = "SbsNlos"


@dataclass(frozen=True)
class Direct:
    mbs_id: int


@dataclass(frozen=True)
class DualHop:
    sbs_id: int
    mbs_id: int


@dataclass(frozen=True, eq=False)
class Realization:
    """Points around the typical device at the origin (metres).

    SBSs are stored in polar form (``sbs_r2`` squared radius, ``sbs_angle``)
    because only the serving SBS ever needs Cartesian coordinates;
    ``sbs_points`` builds them on demand.  ``sbs_los`` marks each kept SBS
    (True = LOS).  ``radius`` is the disc the points were drawn in;
    product-form CSPs add a first-order correction for interferers beyond it
    (``math.inf`` disables it).
    """

    mbs_points: np.ndarray
    sbs_r2: np.ndarray
    sbs_angle: np.ndarray
    sbs_los: np.ndarray
    serving_link: Direct | DualHop
    radius: float = math.inf
    resamples: int = 0

    @classmethod
    def from_points(cls, mbs_points, sbs_points, sbs_los, serving_link, radius: float = math.inf):
        sbs = np.asarray(sbs_points, dtype=float).reshape(-1, 2)
        return cls(np.asarray(mbs_points, dtype=float).reshape(-1, 2), np.sum(sbs * sbs, axis=1),
                   np.arctan2(sbs[:, 1], sbs[:, 0]), np.asarray(sbs_los, dtype=bool), serving_link, radius)

    @property
    def sbs_points(self) -> np.ndarray:
        r = np.sqrt(self.sbs_r2)
        return np.column_stack((r * np.cos(self.sbs_angle), r * np.sin(self.sbs_angle)))

    def sbs_position(self, i: int) -> np.ndarray:
        r = math.sqrt(self.sbs_r2[i])
        return np.array([r * math.cos(self.sbs_angle[i]), r * math.sin(self.sbs_angle[i])])

    @property
    def label(self) -> AssocLabel:
        if isinstance(self.serving_link, Direct):
            return AssocLabel.MBS
        return AssocLabel.SBS_LOS if self.sbs_los[self.serving_link.sbs_id] else AssocLabel.SBS_NLOS


@dataclass(frozen=True)
class CspSample:
    csp: float
    assoc_label: AssocLabel
    csp_backhaul: float | None = None
    csp_access: float | None = None


class EmptyTier(RuntimeError):
    """Raised when resampling could not produce the MBS tier."""


@dataclass
class SampleSet(Sequence):
    """Columnar result of :func:`run`; indexing yields :class:`CspSample`."""

    csp: np.ndarray
    label: np.ndarray  # 0 MBS, 1 SBS LOS, 2 SBS NLOS
    csp_backhaul: np.ndarray  # NaN for direct links
    csp_access: np.ndarray
    resamples: int = 0
    thetas: tuple = ()
    variant: Variant = Variant.HYBRID
    warnings: list = field(default_factory=list)

    _LABELS = (AssocLabel.MBS, AssocLabel.SBS_LOS, AssocLabel.SBS_NLOS)

    def __len__(self) -> int:
        return len(self.csp)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        bh, acc = self.csp_backhaul[i], self.csp_access[i]
        return CspSample(float(self.csp[i]), self._LABELS[int(self.label[i])],
                         None if np.isnan(bh) else float(bh), None if np.isnan(acc) else float(acc))

    def association_counts(self) -> np.ndarray:
        return np.bincount(self.label, minlength=3)

    def hop_correlation(self) -> float:
        """Pearson correlation of backhaul and access CSPs over dual-hop samples."""
        m = self.label > 0
        if m.sum() < 3:
            return math.nan
        bh, acc = self.csp_backhaul[m], self.csp_access[m]
        if bh.std() == 0 or acc.std() == 0:
            return math.nan
        return float(np.corrcoef(bh, acc)[0, 1])


# ------------------------------------------------------------------- sampling


def stream(seed: int, index: int) -> np.random.Generator:
    """Counter-based substream for realization ``index`` under ``seed``."""
    key = (int(seed) & (2**64 - 1)) | ((int(index) & (2**64 - 1)) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def _disc_polar(rng: np.random.Generator, lam: float, radius: float):
    n = rng.poisson(lam * math.pi * radius * radius)
    return radius * radius * rng.random(n), 2.0 * math.pi * rng.random(n)


def _marks(rng: np.random.Generator, dist2: np.ndarray, cfg: NetworkConfig):
    """LOS-ball marks from squared distances; returns (keep mask, los mask)."""
    inside = dist2 <= cfg.mmwave.los_ball_d ** 2
    if cfg.mmwave.p_los >= 1.0 and cfg.mmwave.p_nlos >= 1.0:
        return np.ones(len(dist2), dtype=bool), inside
    coin = rng.random(len(dist2))
    keep = np.where(inside, coin < cfg.mmwave.p_los, coin < cfg.mmwave.p_nlos)
    return keep, inside


@lru_cache(maxsize=64)
def _constants(cfg: NetworkConfig, variant: Variant):
    """(SBS biased power, MBS biased power) for the association rule."""
    if variant is Variant.UWAVE:
        return cfg.small.power_p2 * cfg.small.bias_b2, cfg.macro.power_p1 * cfg.macro.bias_b1
    der = derive(cfg)
    g2 = cfg.small.n_antenna_elements * cfg.device.gain_gd_max
    g1 = cfg.macro.gain_g1_omni * cfg.device.gain_gd_uw
    return (cfg.small.power_p2 * cfg.small.bias_b2 * g2 * der.zeta2,
            cfg.macro.power_p1 * cfg.macro.bias_b1 * g1 * der.zeta1)


def _best_sbs(u: np.ndarray, los: np.ndarray, cfg: NetworkConfig, variant: Variant):
    """Index and path loss of the SBS with the smallest path loss (``u = r^2``)."""
    if variant is Variant.UWAVE:
        i = int(np.argmin(u))
        return i, u[i] ** (cfg.small.ple_alpha2_nlos / 2.0)
    best, best_pl = -1, math.inf
    for mask, alpha in ((los, cfg.small.ple_alpha2_los), (~los, cfg.small.ple_alpha2_nlos)):
        if mask.any():
            idx = np.flatnonzero(mask)
            j = int(idx[np.argmin(u[idx])])
            pl = u[j] ** (alpha / 2.0)
            if pl < best_pl:
                best, best_pl = j, pl
    return best, best_pl


def sample_realization(cfg: NetworkConfig, rng: np.random.Generator,
                       variant: Variant = Variant.HYBRID, radius: float | None = None) -> Realization:
    """Draw both tiers in a disc and associate the typical device.

    Hybrid-type variants compare ``P B G zeta / l`` with mm-wave path loss
    ``r^alpha_L`` (LOS) or ``r^alpha_N`` (NLOS) for SBSs.  The microwave-only
    variant compares ``P B r^-alpha`` with the SBS exponent ``alpha_N`` and
    no blockage marks.  The serving SBS is backhauled by its nearest MBS.
    """
    variant = Variant(variant)
    R = cfg.radius if radius is None else radius
    expected = math.pi * R * R * (cfg.macro.density_lambda1 + cfg.small.density_lambda2)
    if expected > _MAX_EXPECTED_POINTS:
        raise ValueError(f"disc of radius {R:.4g} m holds {expected:.3g} expected points; "
                         "set window_radius for very sparse tiers")
    retries = 0
    while True:
        u1, ang1 = _disc_polar(rng, cfg.macro.density_lambda1, R)
        u2, ang2 = _disc_polar(rng, cfg.small.density_lambda2, R)
        if len(u1):
            break
        retries += 1
        if retries > _MAX_RETRIES:
            raise EmptyTier("no MBS drawn after repeated resampling")
    r1 = np.sqrt(u1)
    mbs = np.column_stack((r1 * np.cos(ang1), r1 * np.sin(ang1)))
    if variant is Variant.UWAVE:
        los = np.zeros(len(u2), dtype=bool)
    else:
        keep, los = _marks(rng, u2, cfg)
        if not keep.all():
            u2, ang2, los = u2[keep], ang2[keep], los[keep]
    s_pow, m_pow = _constants(cfg, variant)
    i1 = int(np.argmin(u1))
    link: Direct | DualHop = Direct(i1)
    real = Realization(mbs, u2, ang2, los, link, R, retries)
    if len(u2):
        i2, pl2 = _best_sbs(u2, los, cfg, variant)
        if s_pow / pl2 > m_pow / u1[i1] ** (cfg.macro.ple_alpha1 / 2.0):
            pos = real.sbs_position(i2)
            to_mbs = np.hypot(mbs[:, 0] - pos[0], mbs[:, 1] - pos[1])
            real = Realization(mbs, u2, ang2, los, DualHop(i2, int(np.argmin(to_mbs))), R, retries)
    return real


# ------------------------------------------------------------- per-link CSPs


def _far_field_log(lam: float, theta: float, r0: float, alpha: float, radius: float, offset: float) -> float:
    """First-order log-CSP loss from interferers outside a disc of ``radius``.

    ``offset`` is the distance of the receiver from the disc centre.  For
    ``alpha = 4`` the exterior integral is exact (``pi R^2 / (R^2 - s^2)^2``);
    otherwise the disc is shrunk to ``R - s`` around the receiver.
    """
    if not math.isfinite(radius) or lam == 0 or theta == 0:
        return 0.0
    if offset >= radius:
        return 0.0
    if alpha == 4.0:
        integral = math.pi * radius**2 / (radius**2 - offset**2) ** 2
    else:
        integral = 2.0 * math.pi * (radius - offset) ** (2.0 - alpha) / (alpha - 2.0)
    return -lam * theta * r0**alpha * integral


def _product_csp(rx: np.ndarray, tx: np.ndarray, serving: int, theta: float, alpha: float,
                 lam: float, radius: float) -> float:
    dist = np.hypot(tx[:, 0] - rx[0], tx[:, 1] - rx[1])
    r0 = dist[serving]
    others = np.delete(dist, serving)
    log_p = -np.sum(np.log1p(theta * (r0 / others) ** alpha))
    log_p += _far_field_log(lam, theta, r0, alpha, radius, float(np.hypot(rx[0], rx[1])))
    return float(math.exp(log_p))


def csp_direct(real: Realization, theta_d: float, cfg: NetworkConfig) -> float:
    """``prod_i 1 / (1 + theta (r0 / r_i)^alpha1)`` over non-serving MBSs."""
    if not isinstance(real.serving_link, Direct):
        raise ValueError("realization is not served directly by an MBS")
    return _product_csp(np.zeros(2), real.mbs_points, real.serving_link.mbs_id, theta_d,
                        cfg.macro.ple_alpha1, cfg.macro.density_lambda1, real.radius)


def csp_backhaul(real: Realization, theta2: float, cfg: NetworkConfig) -> float:
    """Same product form seen from the serving SBS towards its MBS."""
    link = real.serving_link
    if not isinstance(link, DualHop):
        raise ValueError("realization has no dual-hop link")
    return _product_csp(real.sbs_position(link.sbs_id), real.mbs_points, link.mbs_id, theta2,
                        cfg.macro.ple_alpha1, cfg.macro.density_lambda1, real.radius)


def _nu_scale(cfg: NetworkConfig, power: float, gain: float) -> float:
    der = derive(cfg)
    near = der.zeta2 if cfg.access_nu_near_field else 1.0
    return der.noise_sigma2 / (power * gain * near)


def csp_access(real: Realization, theta_d: float, cfg: NetworkConfig) -> float:
    """Exact Nakagami survival ``Gamma(m, m nu / Omega) / Gamma(m)`` of the mm-wave access hop."""
    link = real.serving_link
    if not isinstance(link, DualHop):
        raise ValueError("realization has no dual-hop link")
    mm = cfg.mmwave
    los = bool(real.sbs_los[link.sbs_id])
    u = float(real.sbs_r2[link.sbs_id])
    alpha = cfg.small.ple_alpha2_los if los else cfg.small.ple_alpha2_nlos
    m, omega = (mm.m_los, mm.omega_los) if los else (mm.m_nlos, mm.omega_nlos)
    gain = cfg.small.n_antenna_elements * cfg.device.gain_gd_max
    nu = theta_d * u ** (alpha / 2.0) * _nu_scale(cfg, cfg.small.power_p2, gain)
    return float(upper_gamma_ratio(m, m * nu / omega))


def csp_access_uwave(real: Realization, theta_d: float, cfg: NetworkConfig) -> float:
    """Microwave access hop: product over the other SBSs (own orthogonal band)."""
    link = real.serving_link
    if not isinstance(link, DualHop):
        raise ValueError("realization has no dual-hop link")
    alpha = cfg.small.ple_alpha2_nlos
    u0 = real.sbs_r2[link.sbs_id]
    others = np.delete(real.sbs_r2, link.sbs_id)
    log_p = -np.sum(np.log1p(theta_d * (u0 / others) ** (alpha / 2.0)))
    log_p += _far_field_log(cfg.small.density_lambda2, theta_d, math.sqrt(u0), alpha, real.radius, 0.0)
    return float(math.exp(log_p))


def csp_backhaul_mmwave(real: Realization, theta2: float, cfg: NetworkConfig, rng: np.random.Generator) -> float:
    """Noise-limited mm-wave backhaul from the lowest-path-loss marked MBS."""
    link = real.serving_link
    if not isinstance(link, DualHop):
        raise ValueError("realization has no dual-hop link")
    mm = cfg.mmwave
    s = real.sbs_position(link.sbs_id)
    d2 = (real.mbs_points[:, 0] - s[0]) ** 2 + (real.mbs_points[:, 1] - s[1]) ** 2
    keep, los = _marks(rng, d2, cfg)
    if not keep.any():
        return 0.0
    pl = np.where(los, d2 ** (cfg.small.ple_alpha2_los / 2.0), d2 ** (cfg.small.ple_alpha2_nlos / 2.0))
    pl = np.where(keep, pl, np.inf)
    i = int(np.argmin(pl))
    m, omega = (mm.m_los, mm.omega_los) if los[i] else (mm.m_nlos, mm.omega_nlos)
    gain = cfg.macro.gain_g1_omni * derive(cfg).g2_max
    nu = theta2 * pl[i] * _nu_scale(cfg, cfg.macro.power_p1, gain)
    return float(upper_gamma_ratio(m, m * nu / omega))


# ----------------------------------------------------------------------- run


def _one(cfg: NetworkConfig, theta_sets, seed: int, index: int, variant: Variant, radius: float | None):
    rng = stream(seed, index)
    real = sample_realization(cfg, rng, variant, radius)
    rows = []
    if isinstance(real.serving_link, Direct):
        for _, _, th_dir in theta_sets:
            rows.append((csp_direct(real, th_dir, cfg), 0, math.nan, math.nan, real.resamples))
        return rows
    lab = 1 if real.sbs_los[real.serving_link.sbs_id] else 2
    mm_state = rng.bit_generator.state if variant in (Variant.MMWAVE_BACKHAUL, Variant.MIXED) else None
    for th_bh, th_acc, _ in theta_sets:
        if mm_state is not None:
            # identical backhaul marks for every threshold set
            rng.bit_generator.state = mm_state
            bh = csp_backhaul_mmwave(real, th_bh, cfg, rng)
        else:
            bh = csp_backhaul(real, th_bh, cfg)
        if variant in (Variant.UWAVE, Variant.MIXED):
            acc = csp_access_uwave(real, th_acc, cfg)
        else:
            acc = csp_access(real, th_acc, cfg)
        rows.append((bh * acc, lab, bh, acc, real.resamples))
    return rows


def _chunk(args):
    cfg, theta_sets, seed, lo, hi, variant, radius = args
    return [_one(cfg, theta_sets, seed, i, variant, radius) for i in range(lo, hi)]


def _normalise_thetas(thetas) -> tuple[float, float, float]:
    t = tuple(float(x) for x in thetas)
    if len(t) == 2:
        return (t[0], t[1], t[1])
    if len(t) != 3:
        raise ValueError("thetas must be (backhaul, device) or (backhaul, access, direct)")
    return t


def run_many(cfg: NetworkConfig, theta_sets, n_realizations: int, seed: int = 0,
             variant: Variant = Variant.HYBRID, *, workers: int = 1, radius: float | None = None) -> list[SampleSet]:
    """Like :func:`run` for several threshold sets evaluated on the same realizations."""
    if n_realizations < 1:
        raise ValueError("n_realizations must be >= 1")
    variant = Variant(variant)
    sets = [_normalise_thetas(t) for t in theta_sets]
    if not sets:
        raise ValueError("no threshold sets given")
    n = int(n_realizations)
    if workers > 1:
        step = max(1, math.ceil(n / (4 * workers)))
        jobs = [(cfg, sets, seed, lo, min(lo + step, n), variant, radius) for lo in range(0, n, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = [r for part in pool.map(_chunk, jobs) for r in part]
    else:
        rows = _chunk((cfg, sets, seed, 0, n, variant, radius))
    arr = np.array(rows, dtype=float)  # (n, sets, 5)
    resamples = int(arr[:, 0, 4].sum())
    msgs = []
    if resamples > _EMPTY_WARN_FRACTION * n:
        msgs.append(f"{resamples} empty-tier resamples in {n} realizations; small-density results may be biased")
        warnings.warn(msgs[-1], RuntimeWarning, stacklevel=3)
    return [SampleSet(arr[:, k, 0], arr[:, k, 1].astype(np.int64), arr[:, k, 2], arr[:, k, 3], resamples,
                      sets[k], variant, list(msgs)) for k in range(len(sets))]


def run(cfg: NetworkConfig, thetas, n_realizations: int, seed: int = 0,
        variant: Variant = Variant.HYBRID, *, workers: int = 1, radius: float | None = None) -> SampleSet:
    """Sample ``n_realizations`` CSPs.

    ``thetas`` is ``(theta_backhaul, theta_device)`` or a triple with a
    separate direct-link threshold.  ``workers > 1`` spreads index ranges over
    processes; the output is identical to a serial run.
    """
    return run_many(cfg, [thetas], n_realizations, seed, variant, workers=workers, radius=radius)[0]


# ----------------------------------------------------------------- estimators


def _csp_array(samples) -> np.ndarray:
    if isinstance(samples, SampleSet):
        return samples.csp
    if len(samples) and isinstance(samples[0], CspSample):
        return np.array([s.csp for s in samples], dtype=float)
    return np.asarray(samples, dtype=float)


def empirical_meta(samples, x_grid) -> MetaCurve:
    """Fraction of samples with CSP above each ``x``."""
    c = _csp_array(samples)
    if c.size == 0:
        raise ValueError("no samples")
    srt = np.sort(c)
    xs = tuple(float(x) for x in x_grid)
    above = 1.0 - np.searchsorted(srt, np.asarray(xs), side="right") / c.size
    return MetaCurve(xs, tuple(above.tolist()), Method.EMPIRICAL, None)


def empirical_moment(samples, b: complex) -> tuple[complex, float]:
    """Sample mean of ``csp^b`` and its jackknife standard error.

    For a plain mean the jackknife error reduces to ``std / sqrt(n)``.
    """
    c = _csp_array(samples)
    if c.size == 0:
        raise ValueError("no samples")
    b = complex(b)
    if b == 0:
        return 1.0 + 0.0j, 0.0
    if b.real < 0:
        assert np.all(c > 0), "zero CSP with a negative order"
    with np.errstate(divide="ignore"):
        v = np.exp(b * np.log(c.astype(complex)))
    mean = v.mean()
    n = c.size
    se = float(np.sqrt(np.sum(np.abs(v - mean) ** 2) / (n * (n - 1)))) if n > 1 else math.inf
    if b.imag == 0:
        mean = complex(mean.real, 0.0)
    return mean, se


def empirical_variance(samples) -> tuple[float, float]:
    """``M2 - M1^2`` from samples with its delete-one jackknife standard error."""
    c = _csp_array(samples)
    n = c.size
    if n < 2:
        raise ValueError("need at least two samples")
    s1, s2 = c.sum(), np.sum(c * c)
    value = s2 / n - (s1 / n) ** 2
    loo = (s2 - c * c) / (n - 1) - ((s1 - c) / (n - 1)) ** 2
    se = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return float(value), se


def brute_force_success(distances: np.ndarray, serving: int, theta: float, alpha: float, n_draws: int,
                        rng: np.random.Generator) -> tuple[float, float]:
    """Success frequency of ``SIR > theta`` over Rayleigh fading draws; returns (freq, std-error).

    This is a test oracle for the product forms, not used by :func:`run`.
    """
    d = np.asarray(distances, dtype=float)
    gain = d ** (-alpha)
    hits = 0
    done = 0
    batch = 200_000
    while done < n_draws:
        k = min(batch, n_draws - done)
        h = rng.exponential(size=(k, d.size))
        rx = h * gain[None, :]
        sig = rx[:, serving]
        interf = rx.sum(axis=1) - sig
        hits += int(np.count_nonzero(sig > theta * interf))
        done += k
    p = hits / n_draws
    return p, math.sqrt(p * (1 - p) / n_draws)
