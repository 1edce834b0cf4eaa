import math

import numpy as np
import pytest

from hybridmeta import mcsim
from hybridmeta.association import assoc_probs
from hybridmeta.mcsim import (AssocLabel, Direct, DualHop, Realization, brute_force_success, csp_access,
                              csp_backhaul, csp_direct, empirical_meta, empirical_moment, empirical_variance,
                              sample_realization, stream)
from hybridmeta.model import NetworkConfig, db_to_lin, derive, replace_path
from hybridmeta.moments import MomentEngine, Variant, network_jitter

# frozen 10-point fixtures (metres); index 0 serves
FIX_A = np.array([[120.0, 35.0], [-410.0, 260.0], [380.0, -520.0], [-90.0, -700.0], [860.0, 140.0],
                  [-950.0, -330.0], [40.0, 1010.0], [600.0, 720.0], [-640.0, 880.0], [1150.0, -890.0]])
FIX_B = np.array([[-300.0, 200.0], [500.0, 100.0], [-700.0, -400.0], [250.0, 800.0], [-150.0, -900.0],
                  [900.0, -700.0], [-1100.0, 600.0], [1300.0, 900.0], [-50.0, 1500.0], [1600.0, -100.0]])


def _with(cfg, **paths):
    for k, v in paths.items():
        cfg = replace_path(cfg, k.replace("__", "."), v)
    return cfg


def _brute(points, rx, theta, alpha, seed):
    d = np.hypot(points[:, 0] - rx[0], points[:, 1] - rx[1])
    return brute_force_success(d, 0, theta, alpha, 1_000_000, np.random.default_rng(seed))


# ------------------------------------------------------------ CSP formulas


def test_csp_direct_small_cases(cfg):
    alone = Realization.from_points([[100.0, 0.0]], np.zeros((0, 2)), [], Direct(0))
    assert csp_direct(alone, 3.0, cfg) == 1.0
    pair = Realization.from_points([[100.0, 0.0], [0.0, -100.0]], np.zeros((0, 2)), [], Direct(0))
    assert csp_direct(pair, 3.0, cfg) == pytest.approx(1 / 4, rel=1e-15)


@pytest.mark.parametrize("theta", [0.3, 1.0, 4.0])
def test_csp_direct_brute_force(cfg, theta):
    real = Realization.from_points(FIX_A, np.zeros((0, 2)), [], Direct(0))
    freq, se = _brute(FIX_A, (0.0, 0.0), theta, 4.0, 11)
    assert abs(csp_direct(real, theta, cfg) - freq) <= 3 * se


def test_csp_backhaul_small_cases(cfg):
    sbs = [[30.0, 40.0]]
    alone = Realization.from_points([[130.0, 40.0]], sbs, [True], DualHop(0, 0))
    assert csp_backhaul(alone, 2.0, cfg) == 1.0
    pair = Realization.from_points([[130.0, 40.0], [30.0, 140.0]], sbs, [True], DualHop(0, 0))
    assert csp_backhaul(pair, 2.0, cfg) == pytest.approx(1 / 3, rel=1e-15)


@pytest.mark.parametrize("theta", [0.3, 1.0, 4.0])
def test_csp_backhaul_brute_force(cfg, theta):
    sbs = np.array([[-150.0, 120.0]])
    real = Realization.from_points(FIX_B, sbs, [True], DualHop(0, 0))
    freq, se = _brute(FIX_B, sbs[0], theta, 4.0, 12)
    assert abs(csp_backhaul(real, theta, cfg) - freq) <= 3 * se


def _nu_one_theta(cfg, r, los=True):
    der = derive(cfg)
    alpha = cfg.small.ple_alpha2_los if los else cfg.small.ple_alpha2_nlos
    scale = der.noise_sigma2 / (cfg.small.power_p2 * cfg.small.n_antenna_elements * cfg.device.gain_gd_max)
    return 1.0 / (r**alpha * scale)


def test_csp_access_examples(cfg):
    r = 150.0
    real = Realization.from_points([[900.0, 0.0]], [[r, 0.0]], [True], DualHop(0, 0))
    th = _nu_one_theta(cfg, r)
    # m_L = 2 with Omega_L = m_L so that the gamma argument m nu / Omega equals nu
    assert csp_access(real, th, _with(cfg, mmwave__omega_los=2.0)) == pytest.approx(2 / math.e, rel=1e-12)
    assert csp_access(real, th, cfg) == pytest.approx(3 * math.exp(-2), rel=1e-12)
    ray = _with(cfg, mmwave__m_los=1)
    assert csp_access(real, 0.5 * th, ray) == pytest.approx(math.exp(-0.5), rel=1e-12)
    near = Realization.from_points([[900.0, 0.0]], [[1e-9, 0.0]], [True], DualHop(0, 0))
    assert csp_access(near, th, cfg) == pytest.approx(1.0, abs=1e-12)


def test_wrong_link_rejected(cfg):
    direct = Realization.from_points([[100.0, 0.0]], np.zeros((0, 2)), [], Direct(0))
    with pytest.raises(ValueError):
        csp_access(direct, 1.0, cfg)
    with pytest.raises(ValueError):
        csp_backhaul(direct, 1.0, cfg)
    dual = Realization.from_points([[100.0, 0.0]], [[10.0, 0.0]], [True], DualHop(0, 0))
    with pytest.raises(ValueError):
        csp_direct(dual, 1.0, cfg)


# ------------------------------------------------------------- sampling


def test_sparse_sbs_gives_direct(cfg):
    sparse = _with(cfg, small__density_lambda2=1e-12, window_radius=5000.0)
    for i in range(20):
        real = sample_realization(sparse, stream(1, i))
        assert isinstance(real.serving_link, Direct) and len(real.mbs_points) >= 1


def test_oversized_window_rejected(cfg):
    with pytest.raises(ValueError, match="window_radius"):
        sample_realization(_with(cfg, small__density_lambda2=1e-12), stream(1, 0))


def test_realization_determinism(cfg):
    a = sample_realization(cfg, stream(99, 7))
    b = sample_realization(cfg, stream(99, 7))
    assert np.array_equal(a.mbs_points, b.mbs_points)
    assert np.array_equal(a.sbs_r2, b.sbs_r2) and np.array_equal(a.sbs_angle, b.sbs_angle)
    assert a.serving_link == b.serving_link
    c = sample_realization(cfg, stream(99, 8))
    assert not np.array_equal(a.sbs_r2, c.sbs_r2)


def test_run_determinism_and_parallel(cfg):
    a = mcsim.run(cfg, (1.0, 1.0), 400, seed=5)
    b = mcsim.run(cfg, (1.0, 1.0), 400, seed=5)
    c = mcsim.run(cfg, (1.0, 1.0), 400, seed=5, workers=3)
    assert list(a) == list(b) == list(c)
    assert np.array_equal(a.csp, c.csp)
    # a prefix of a longer run is the shorter run
    d = mcsim.run(cfg, (1.0, 1.0), 600, seed=5)
    assert np.array_equal(d.csp[:400], a.csp)


def test_sample_records(cfg):
    s = mcsim.run(cfg, (1.0, 1.0), 200, seed=2)
    assert len(s) == 200
    first = s[0]
    assert isinstance(first.assoc_label, AssocLabel)
    assert all(0.0 < x.csp <= 1.0 for x in s)
    assert s.association_counts().sum() == 200


def test_empty_tier_warning():
    cfg = _with(NetworkConfig(), macro__density_lambda1=1e-8, window_radius=3000.0)
    with pytest.warns(RuntimeWarning, match="empty-tier"):
        s = mcsim.run(cfg, (1.0, 1.0), 300, seed=1)
    assert s.resamples > 0 and s.warnings


def _truncate(real: Realization, radius: float) -> Realization | None:
    """The same realization seen through a disc of ``radius``; None if the serving links leave it."""
    keep_m = np.hypot(real.mbs_points[:, 0], real.mbs_points[:, 1]) <= radius
    keep_s = real.sbs_r2 <= radius * radius
    new_m = np.cumsum(keep_m) - 1
    new_s = np.cumsum(keep_s) - 1
    link = real.serving_link
    if isinstance(link, Direct):
        if not keep_m[link.mbs_id]:
            return None
        new_link = Direct(int(new_m[link.mbs_id]))
    else:
        if not (keep_m[link.mbs_id] and keep_s[link.sbs_id]):
            return None
        new_link = DualHop(int(new_s[link.sbs_id]), int(new_m[link.mbs_id]))
    return Realization(real.mbs_points[keep_m], real.sbs_r2[keep_s], real.sbs_angle[keep_s], real.sbs_los[keep_s],
                       new_link, radius)


@pytest.mark.parametrize("theta", [1.0, 10.0])
def test_radius_doubling(cfg, theta):
    # paired: each realization drawn in 2R is also evaluated through the default disc R
    R = cfg.radius
    small, big = [], []
    for i in range(3000):
        real = sample_realization(cfg, stream(17, i), radius=2 * R)
        cut = _truncate(real, R)
        assert cut is not None
        for r, out in ((real, big), (cut, small)):
            if isinstance(r.serving_link, Direct):
                out.append(csp_direct(r, theta, cfg))
            else:
                out.append(csp_backhaul(r, theta, cfg) * csp_access(r, theta, cfg))
    m_small, m_big = np.mean(small), np.mean(big)
    assert abs(m_small - m_big) / m_big < 0.005


# ------------------------------------------------------------- estimators


def test_empirical_meta_and_moments(cfg):
    s = mcsim.run(cfg, (1.0, 1.0), 2000, seed=8)
    c = empirical_meta(s, [0.0, 0.3, 1.0])
    assert c.ccdf[0] == 1.0 and c.ccdf[2] == 0.0
    assert empirical_moment(s, 0) == (1.0, 0.0)
    m1, se = empirical_moment(s, 1)
    xs = np.linspace(0, 1, 4001)
    area = np.trapezoid(empirical_meta(s, xs).ccdf, xs)
    assert abs(m1.real - area) <= 3 * se
    v, vse = empirical_variance(s)
    assert v == pytest.approx(np.var(s.csp), rel=1e-9) and vse > 0


def test_empirical_moment_rejects_zero():
    with pytest.raises(AssertionError):
        empirical_moment(np.array([0.5, 0.0]), -1)


# ---------------------------------------------- analytic counterparts (MC oracle)


@pytest.fixture(scope="module")
def default_samples():
    th = db_to_lin(-10.0)
    return mcsim.run_many(NetworkConfig(), [(1.0, 1.0), (th, th)], 20_000, seed=404, workers=2)


def test_mc_association_matches(default_samples, cfg):
    s = default_samples[0]
    n = len(s)
    freq = s.association_counts() / n
    ap = assoc_probs(cfg)
    ref = np.array([ap.a1, ap.a2_los, ap.a2_nlos])
    se = np.sqrt(np.maximum(ref * (1 - ref), 1 / n) / n)
    assert np.all(np.abs(freq - ref) <= 3 * se)


def test_mc_first_moment_matches(default_samples, cfg):
    s = default_samples[0]
    m1, se = empirical_moment(s, 1)
    ana = float(np.real(MomentEngine(cfg, 1.0, 1.0)(1.0)))
    assert abs(m1.real - ana) <= 3 * se


def test_mc_meta_point(default_samples, cfg):
    from hybridmeta.metadist import Method, meta_sir
    s = default_samples[0]
    emp = empirical_meta(s, [0.3]).ccdf[0]
    ana = meta_sir(cfg, (1.0, 1.0), [0.3], Method.GIL_PELAEZ).ccdf[0]
    assert abs(emp - ana) <= 3 * math.sqrt(ana * (1 - ana) / len(s))


def test_mc_local_delay_and_jitter(default_samples, cfg):
    th = db_to_lin(-10.0)
    s = default_samples[1]
    m, se = empirical_moment(s, -1)
    assert m.real == pytest.approx(1.11, abs=max(3 * se, 0.02))
    ana_m = float(np.real(MomentEngine(cfg, th, th).result(-1.0).value))
    assert abs(m.real - ana_m) <= 3 * se
    jit, _ = network_jitter((th, th), cfg)
    v, vse = empirical_variance(1.0 / s.csp)
    assert abs(v - jit) <= 3 * vse


def test_mc_rayleigh_moments(cfg):
    ray = _with(cfg, mmwave__m_los=1, mmwave__m_nlos=1)
    s = mcsim.run(ray, (1.0, 1.0), 10_000, seed=21, workers=2)
    m = np.real(MomentEngine(ray, 1.0, 1.0)(np.array([1.0, 2.0])))
    e1, se1 = empirical_moment(s, 1)
    v, vse = empirical_variance(s)
    assert abs(e1.real - m[0]) <= 3 * se1
    assert abs(v - (m[1] - m[0] ** 2)) <= 3 * vse


def test_mc_uwave_first_moment(cfg):
    s = mcsim.run(cfg, (1.0, 1.0), 10_000, seed=31, variant=Variant.UWAVE, workers=2)
    e1, se = empirical_moment(s, 1)
    ana = float(np.real(MomentEngine(cfg, 1.0, 1.0, variant=Variant.UWAVE)(1.0)))
    assert abs(e1.real - ana) <= 3 * se


def test_hop_correlation_reported(default_samples):
    r = default_samples[0].hop_correlation()
    assert math.isfinite(r) and abs(r) < 0.1
