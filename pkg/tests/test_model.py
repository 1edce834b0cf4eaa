import dataclasses
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridmeta.model import (ConfigError, NetworkConfig, config_from_dict, config_to_dict, db_to_lin, derive,
                              derive_antenna, derive_gain_ratios, derive_near_field, derive_noise, field_to_si,
                              field_unit, lin_to_db, load_config, replace_path, validate)


def test_antenna_examples():
    assert derive_antenna(1)[0] == 1.0
    g_max, g_min, theta_a = derive_antenna(10)
    assert g_max == 10.0
    assert g_min == pytest.approx(1.0065, abs=5e-5)
    assert theta_a == pytest.approx(0.5477, abs=5e-5)
    assert derive_antenna(100)[2] == pytest.approx(math.sqrt(3) / 10, rel=1e-12)


def test_antenna_monotone():
    prev = derive_antenna(1)
    for n in range(2, 200):
        cur = derive_antenna(n)
        assert cur[0] > prev[0] and cur[2] < prev[2]
        prev = cur


def test_noise_examples():
    assert derive_noise(1e9, 10.0) == pytest.approx(3.981e-11, rel=1e-3)
    assert lin_to_db(derive_noise(1.0, 0.0) * 1e3) == pytest.approx(-174.0, abs=1e-12)
    assert lin_to_db(derive_noise(1e8, 10.0) * 1e3) == pytest.approx(-84.0, abs=1e-12)
    with pytest.raises(ValueError):
        derive_noise(0.0, 10.0)


def test_near_field_examples():
    assert derive_near_field(28e9) == pytest.approx(7.26e-7, rel=1e-3)
    c = 2.998e8
    assert derive_near_field(c / (4 * math.pi)) == pytest.approx(1.0, rel=1e-12)
    assert derive_near_field(2.8e9) == pytest.approx(100 * derive_near_field(28e9), rel=1e-12)


def test_gain_ratios(cfg):
    a_hat, a_bar = derive_gain_ratios(cfg)
    # 5 W * 100 / 50 W * (2 GHz / 28 GHz)^2, carrier speed cancels
    assert a_hat == pytest.approx(10.0 / 196.0, rel=1e-13)
    assert a_hat * a_bar == pytest.approx(1.0, rel=1e-15)
    equal = replace_path(replace_path(replace_path(replace_path(cfg, "small.power_p2", 50.0),
                                                   "small.n_antenna_elements", 1),
                                      "device.gain_gd_max", 1.0), "mmwave.carrier_freq_mm", 2e9)
    assert derive_gain_ratios(equal) == pytest.approx((1.0, 1.0), rel=1e-13)


@given(st.floats(0.01, 100), st.floats(0.01, 100), st.integers(1, 256))
def test_gain_ratio_reciprocal(p2, b2, n):
    cfg = replace_path(replace_path(replace_path(NetworkConfig(), "small.power_p2", p2), "small.bias_b2", b2),
                       "small.n_antenna_elements", n)
    a_hat, a_bar = derive_gain_ratios(cfg)
    assert a_hat * a_bar == pytest.approx(1.0, rel=1e-14)


def test_defaults_valid(cfg):
    assert validate(cfg) == []
    d = derive(cfg)
    assert d.g2_max == 10.0


def test_validation_paths(cfg):
    bad = validate(replace_path(cfg, "macro.ple_alpha1", 2.0))
    assert [(v.field, v.fatal) for v in bad] == [("macro.ple_alpha1", True)]
    assert "ple_alpha1 must exceed 2" in str(bad[0])
    bad = validate(replace_path(cfg, "mmwave.p_los", 1.2))
    assert [v.field for v in bad] == ["mmwave.p_los"]


def test_config_errors_name_paths():
    with pytest.raises(ConfigError) as exc:
        config_from_dict({"macro": {"nope": 1}, "mmwave": {"p_los": 2.0}})
    assert [v.field for v in exc.value.violations] == ["macro.nope"]
    with pytest.raises(ConfigError) as exc:
        config_from_dict({"mmwave": {"p_los": 2.0}})
    assert exc.value.violations[0].field == "mmwave.p_los"
    with pytest.raises(ConfigError):
        config_from_dict({"bogus": 1})


def test_file_units(cfg):
    d = config_to_dict(cfg)
    assert d["macro"]["density_lambda1"] == pytest.approx(2.0)
    assert d["macro"]["power_p1"] == pytest.approx(lin_to_db(50e3))
    assert d["mmwave"]["carrier_freq_mm"] == pytest.approx(28.0)
    assert field_unit("small.density_lambda2") == ("per_km2", "m^-2")
    assert field_unit("small.ple_alpha2_los") == ("SI", "SI")
    assert field_to_si("small.density_lambda2", 70.0) == pytest.approx(70e-6)
    assert field_to_si("macro.power_p1", lin_to_db(50e3)) == pytest.approx(50.0)


def test_load_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"small": {"density_lambda2": 20}, "thresholds": {"theta_device": -3}}))
    cfg = load_config(p)
    assert cfg.small.density_lambda2 == pytest.approx(20e-6)
    assert cfg.thresholds.theta_device == pytest.approx(db_to_lin(-3))
    assert cfg.macro == NetworkConfig().macro


_positive = st.floats(1e-3, 1e3, allow_nan=False)


@settings(max_examples=60)
@given(lam1=_positive, lam2=_positive, p1=st.floats(-30, 80), f=st.floats(0.5, 100), th=st.floats(-30, 30),
       w=st.floats(0.01, 10))
def test_unit_round_trip(lam1, lam2, p1, f, th, w):
    src = {
        "macro": {"density_lambda1": lam1, "power_p1": p1},
        "small": {"density_lambda2": lam2},
        "mmwave": {"carrier_freq_mm": f, "bandwidth_w2": w},
        "thresholds": {"theta_device": th},
    }
    back = config_to_dict(config_from_dict(src))
    for sec, fields in src.items():
        for k, v in fields.items():
            assert back[sec][k] == pytest.approx(v, rel=1e-12, abs=1e-12)


def test_config_is_frozen(cfg):
    with pytest.raises(dataclasses.FrozenInstanceError):
        cfg.noise_figure_db = 3.0


def test_default_window(cfg):
    assert cfg.radius == pytest.approx(max(5 / math.sqrt(2e-6), 5 / math.sqrt(70e-6), 2000.0))
