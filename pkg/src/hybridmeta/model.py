"""Network parameters, validation and derived physical quantities.

All dataclasses hold strict SI values (m, m^-2, W, Hz, linear gains).  The
config file uses human units (per km^2, dBm, dB, GHz, Gbps); conversion
happens once in :func:`config_from_dict` and is inverted by
:func:`config_to_dict`.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

__all__ = [
    "SPEED_OF_LIGHT",
    "MacroTier",
    "SmallTier",
    "MmWaveChannel",
    "UWaveSpectrum",
    "DeviceConfig",
    "Thresholds",
    "NetworkConfig",
    "DerivedParams",
    "Violation",
    "ConfigError",
    "derive_antenna",
    "derive_noise",
    "derive_near_field",
    "derive_gain_ratios",
    "derive",
    "validate",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "replace_path",
    "db_to_lin",
    "lin_to_db",
    "FILE_UNITS",
    "SI_UNITS",
    "field_unit",
    "field_to_si",
]

SPEED_OF_LIGHT = 2.998e8


def db_to_lin(db: float) -> float:
    return 10.0 ** (db / 10.0)


def lin_to_db(lin: float) -> float:
    return 10.0 * math.log10(lin)


@dataclass(frozen=True)
class MacroTier:
    density_lambda1: float = 2e-6
    power_p1: float = 50.0
    bias_b1: float = 1.0
    ple_alpha1: float = 4.0
    gain_g1_omni: float = 1.0


@dataclass(frozen=True)
class SmallTier:
    density_lambda2: float = 70e-6
    power_p2: float = 5.0
    bias_b2: float = 1.0
    ple_alpha2_los: float = 2.0
    ple_alpha2_nlos: float = 4.0
    n_antenna_elements: int = 10


@dataclass(frozen=True)
class MmWaveChannel:
    m_los: int = 2
    m_nlos: int = 1
    omega_los: float = 1.0
    omega_nlos: float = 1.0
    los_ball_d: float = 200.0
    p_los: float = 1.0
    p_nlos: float = 1.0
    carrier_freq_mm: float = 28e9
    bandwidth_w2: float = 1e9


@dataclass(frozen=True)
class UWaveSpectrum:
    bandwidth_w1: float = 100e6
    access_fraction_eta: float = 0.5
    carrier_freq_uw: float = 2e9


@dataclass(frozen=True)
class DeviceConfig:
    gain_gd_max: float = 10.0
    gain_gd_uw: float = 1.0
    # device density; kept for completeness, no formula uses it
    density_lambda_d: float = 0.0


@dataclass(frozen=True)
class Thresholds:
    theta_backhaul: float = 1.0
    theta_device: float = 1.0
    rate_t1: float = 0.0
    rate_t2: float = 0.0
    rate_tbh: float = 0.0
    reliability_x: float = 0.3


@dataclass(frozen=True)
class NetworkConfig:
    """Complete deployment description.

    ``access_nu_near_field`` selects whether the access-link SNR threshold
    ``nu`` carries the mm-wave near-field factor ``zeta2``.  The default
    (False) uses ``nu = theta * sigma^2 / (P2 G2)``; see the decisions ledger.

    ``window_radius`` bounds every radial integral and the simulation disc.
    ``None`` selects ``max(5/sqrt(lambda1), 5/sqrt(lambda2), 10 d)``.
    """

    macro: MacroTier = field(default_factory=MacroTier)
    small: SmallTier = field(default_factory=SmallTier)
    mmwave: MmWaveChannel = field(default_factory=MmWaveChannel)
    uwave: UWaveSpectrum = field(default_factory=UWaveSpectrum)
    device: DeviceConfig = field(default_factory=DeviceConfig)
    thresholds: Thresholds = field(default_factory=Thresholds)
    noise_figure_db: float = 10.0
    access_nu_near_field: bool = False
    window_radius: float | None = None

    @property
    def radius(self) -> float:
        if self.window_radius is not None:
            return float(self.window_radius)
        lam1, lam2 = self.macro.density_lambda1, self.small.density_lambda2
        r = 10.0 * self.mmwave.los_ball_d
        if lam1 > 0:
            r = max(r, 5.0 / math.sqrt(lam1))
        if lam2 > 0:
            r = max(r, 5.0 / math.sqrt(lam2))
        return r

    def with_thresholds(self, theta_backhaul=None, theta_device=None) -> "NetworkConfig":
        th = self.thresholds
        th = dataclasses.replace(
            th,
            theta_backhaul=th.theta_backhaul if theta_backhaul is None else theta_backhaul,
            theta_device=th.theta_device if theta_device is None else theta_device,
        )
        return dataclasses.replace(self, thresholds=th)


@dataclass(frozen=True)
class DerivedParams:
    g2_max: float
    g2_min: float
    beamwidth_theta_a: float
    noise_sigma2: float
    zeta1: float
    zeta2: float
    a_hat: float
    a_bar: float


# ---------------------------------------------------------------- derivations


def derive_antenna(n_elements: int) -> tuple[float, float, float]:
    """Sectorised pattern of an ``n_elements`` array: (g_max, g_min, theta_a)."""
    if n_elements < 1:
        raise ValueError("n_elements must be >= 1")
    n = float(n_elements)
    g_max = n
    g_min = 1.0 / math.sin(3.0 * math.pi / (2.0 * math.sqrt(n))) ** 2
    theta_a = math.sqrt(3.0) / math.sqrt(n)
    return g_max, g_min, theta_a


def derive_noise(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal noise power in watts: -174 dBm/Hz + 10 log10(W) + NF."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    dbm = -174.0 + 10.0 * math.log10(bandwidth_hz) + noise_figure_db
    return 10.0 ** ((dbm - 30.0) / 10.0)


def derive_near_field(carrier_freq: float) -> float:
    """Free-space reference loss at 1 m: (c / (4 pi f))^2."""
    if carrier_freq <= 0:
        raise ValueError("carrier frequency must be positive")
    return (SPEED_OF_LIGHT / (4.0 * math.pi * carrier_freq)) ** 2


def derive_gain_ratios(cfg: NetworkConfig) -> tuple[float, float]:
    """SBS-to-MBS biased-power ratio ``a_hat`` and its reciprocal ``a_bar``."""
    g2 = cfg.small.n_antenna_elements * cfg.device.gain_gd_max
    g1 = cfg.macro.gain_g1_omni * cfg.device.gain_gd_uw
    zeta1 = derive_near_field(cfg.uwave.carrier_freq_uw)
    zeta2 = derive_near_field(cfg.mmwave.carrier_freq_mm)
    num = cfg.small.power_p2 * cfg.small.bias_b2 * g2 * zeta2
    den = cfg.macro.power_p1 * cfg.macro.bias_b1 * g1 * zeta1
    a_hat = num / den
    return a_hat, den / num


def derive(cfg: NetworkConfig) -> DerivedParams:
    g_max, g_min, theta_a = derive_antenna(cfg.small.n_antenna_elements)
    a_hat, a_bar = derive_gain_ratios(cfg)
    return DerivedParams(
        g2_max=g_max,
        g2_min=g_min,
        beamwidth_theta_a=theta_a,
        noise_sigma2=derive_noise(cfg.mmwave.bandwidth_w2, cfg.noise_figure_db),
        zeta1=derive_near_field(cfg.uwave.carrier_freq_uw),
        zeta2=derive_near_field(cfg.mmwave.carrier_freq_mm),
        a_hat=a_hat,
        a_bar=a_bar,
    )


# ------------------------------------------------------------------ validation


@dataclass(frozen=True)
class Violation:
    field: str
    message: str
    fatal: bool = False

    def __str__(self) -> str:
        tag = "fatal" if self.fatal else "invalid"
        return f"{self.field}: {self.message} ({tag})"


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def validate(cfg: NetworkConfig) -> list[Violation]:
    """Return every violated invariant (empty list when the config is valid)."""
    out: list[Violation] = []

    def need(cond: bool, path: str, msg: str, fatal: bool = False) -> None:
        if not cond:
            out.append(Violation(path, msg, fatal))

    m, s, mm, uw, dev, th = cfg.macro, cfg.small, cfg.mmwave, cfg.uwave, cfg.device, cfg.thresholds
    need(m.density_lambda1 > 0, "macro.density_lambda1", "must be positive")
    need(m.power_p1 > 0, "macro.power_p1", "must be positive")
    need(m.bias_b1 > 0, "macro.bias_b1", "must be positive")
    need(m.ple_alpha1 > 2, "macro.ple_alpha1", "ple_alpha1 must exceed 2", fatal=True)
    need(m.gain_g1_omni > 0, "macro.gain_g1_omni", "must be positive")
    need(s.density_lambda2 > 0, "small.density_lambda2", "must be positive")
    need(s.power_p2 > 0, "small.power_p2", "must be positive")
    need(s.bias_b2 > 0, "small.bias_b2", "must be positive")
    need(s.ple_alpha2_los >= 2, "small.ple_alpha2_los", "must be at least 2")
    need(s.ple_alpha2_nlos > 2, "small.ple_alpha2_nlos", "ple_alpha2_nlos must exceed 2", fatal=True)
    need(
        int(s.n_antenna_elements) == s.n_antenna_elements and s.n_antenna_elements >= 1,
        "small.n_antenna_elements",
        "must be an integer >= 1",
    )
    for name in ("m_los", "m_nlos"):
        v = getattr(mm, name)
        need(int(v) == v and v >= 1, f"mmwave.{name}", "must be an integer >= 1")
    need(mm.omega_los > 0, "mmwave.omega_los", "must be positive")
    need(mm.omega_nlos > 0, "mmwave.omega_nlos", "must be positive")
    need(mm.los_ball_d > 0, "mmwave.los_ball_d", "must be positive")
    need(0 <= mm.p_los <= 1, "mmwave.p_los", "must lie in [0, 1]")
    need(0 <= mm.p_nlos <= 1, "mmwave.p_nlos", "must lie in [0, 1]")
    need(mm.carrier_freq_mm > 0, "mmwave.carrier_freq_mm", "must be positive")
    need(mm.bandwidth_w2 > 0, "mmwave.bandwidth_w2", "must be positive")
    need(uw.bandwidth_w1 > 0, "uwave.bandwidth_w1", "must be positive")
    need(0 <= uw.access_fraction_eta <= 1, "uwave.access_fraction_eta", "must lie in [0, 1]")
    need(uw.carrier_freq_uw > 0, "uwave.carrier_freq_uw", "must be positive")
    need(dev.gain_gd_max > 0, "device.gain_gd_max", "must be positive")
    need(dev.gain_gd_uw > 0, "device.gain_gd_uw", "must be positive")
    need(dev.density_lambda_d >= 0, "device.density_lambda_d", "must be nonnegative")
    need(th.theta_backhaul > 0, "thresholds.theta_backhaul", "must be positive")
    need(th.theta_device > 0, "thresholds.theta_device", "must be positive")
    for name in ("rate_t1", "rate_t2", "rate_tbh"):
        need(getattr(th, name) >= 0, f"thresholds.{name}", "must be nonnegative")
    need(0 <= th.reliability_x <= 1, "thresholds.reliability_x", "must lie in [0, 1]")
    need(
        cfg.window_radius is None or cfg.window_radius > 0,
        "window_radius",
        "must be positive when given",
    )
    return out


# ---------------------------------------------------------------- file units

_Conv = tuple[str, Callable[[float], float], Callable[[float], float]]


def _scale(unit: str, k: float) -> _Conv:
    return unit, (lambda v: v * k), (lambda v: v / k)


_DBM: _Conv = ("dBm", lambda v: 10.0 ** ((v - 30.0) / 10.0), lambda w: 10.0 * math.log10(w) + 30.0)
_DB: _Conv = ("dB", db_to_lin, lin_to_db)
_PER_KM2 = _scale("per_km2", 1e-6)
_GHZ = _scale("GHz", 1e9)
_GBPS = _scale("Gbps", 1e9)

# field name -> (file unit, file->SI, SI->file); fields not listed are taken as-is
FILE_UNITS: dict[str, _Conv] = {
    "density_lambda1": _PER_KM2,
    "density_lambda2": _PER_KM2,
    "density_lambda_d": _PER_KM2,
    "power_p1": _DBM,
    "power_p2": _DBM,
    "bias_b1": _DB,
    "bias_b2": _DB,
    "gain_g1_omni": _DB,
    "gain_gd_max": _DB,
    "gain_gd_uw": _DB,
    "carrier_freq_mm": _GHZ,
    "carrier_freq_uw": _GHZ,
    "bandwidth_w1": _GHZ,
    "bandwidth_w2": _GHZ,
    "theta_backhaul": _DB,
    "theta_device": _DB,
    "rate_t1": _GBPS,
    "rate_t2": _GBPS,
    "rate_tbh": _GBPS,
}

_SECTIONS = {
    "macro": MacroTier,
    "small": SmallTier,
    "mmwave": MmWaveChannel,
    "uwave": UWaveSpectrum,
    "device": DeviceConfig,
    "thresholds": Thresholds,
}
_TOP_LEVEL = ("noise_figure_db", "access_nu_near_field", "window_radius")


def _to_si(name: str, value: Any) -> Any:
    conv = FILE_UNITS.get(name)
    if conv is None or value is None:
        return value
    # rates of 0 stay 0; dB fields cannot encode 0 and are rejected by validate
    return conv[1](float(value))


def _from_si(name: str, value: Any) -> Any:
    conv = FILE_UNITS.get(name)
    if conv is None or value is None:
        return value
    return conv[2](float(value))


# SI unit label per converted field, for output manifests
SI_UNITS = {"per_km2": "m^-2", "dBm": "W", "dB": "linear", "GHz": "Hz", "Gbps": "bit/s"}


def field_unit(path: str) -> tuple[str, str]:
    """(file unit, SI unit) of a dotted config path; unconverted fields report ``("SI", "SI")``."""
    conv = FILE_UNITS.get(path.rsplit(".", 1)[-1])
    if conv is None:
        return "SI", "SI"
    return conv[0], SI_UNITS[conv[0]]


def field_to_si(path: str, value: float) -> float:
    """Convert one value of a dotted config path from file units to SI."""
    return _to_si(path.rsplit(".", 1)[-1], value)


def config_from_dict(data: dict, base: NetworkConfig | None = None) -> NetworkConfig:
    """Build a config from a file-unit mapping; missing keys keep ``base`` values.

    Raises :class:`ConfigError` naming the offending path for unknown keys or
    invalid values.
    """
    cfg = base or NetworkConfig()
    problems: list[Violation] = []
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                problems.append(Violation(key, "section must be a mapping"))
                continue
            section = getattr(cfg, key)
            names = {f.name for f in dataclasses.fields(section)}
            updates = {}
            for k, v in value.items():
                if k not in names:
                    problems.append(Violation(f"{key}.{k}", "unknown field"))
                    continue
                try:
                    updates[k] = _to_si(k, v)
                except (TypeError, ValueError) as exc:
                    problems.append(Violation(f"{key}.{k}", f"bad value {v!r}: {exc}"))
            if key == "small" and "n_antenna_elements" in updates:
                updates["n_antenna_elements"] = int(updates["n_antenna_elements"])
            kwargs[key] = dataclasses.replace(section, **updates)
        elif key in _TOP_LEVEL:
            kwargs[key] = value
        else:
            problems.append(Violation(key, "unknown field"))
    if problems:
        raise ConfigError(problems)
    out = dataclasses.replace(cfg, **kwargs)
    bad = validate(out)
    if bad:
        raise ConfigError(bad)
    return out


def config_to_dict(cfg: NetworkConfig) -> dict:
    """Inverse of :func:`config_from_dict` (file units)."""
    out: dict[str, Any] = {}
    for key in _SECTIONS:
        section = getattr(cfg, key)
        out[key] = {f.name: _from_si(f.name, getattr(section, f.name)) for f in dataclasses.fields(section)}
    for key in _TOP_LEVEL:
        out[key] = getattr(cfg, key)
    return out


def load_config(path: str | Path) -> NetworkConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def replace_path(cfg: NetworkConfig, path: str, si_value: Any) -> NetworkConfig:
    """Return ``cfg`` with the dotted ``section.field`` set to an SI value."""
    if "." not in path:
        if path not in _TOP_LEVEL:
            raise KeyError(path)
        return dataclasses.replace(cfg, **{path: si_value})
    section, name = path.split(".", 1)
    if section not in _SECTIONS:
        raise KeyError(path)
    sub = getattr(cfg, section)
    if name not in {f.name for f in dataclasses.fields(sub)}:
        raise KeyError(path)
    if name in ("n_antenna_elements", "m_los", "m_nlos"):
        si_value = int(round(si_value))
    return dataclasses.replace(cfg, **{section: dataclasses.replace(sub, **{name: si_value})})
