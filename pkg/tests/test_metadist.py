import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from hybridmeta.metadist import (BetaFit, Degenerate, Method, beta_ccdf, beta_fit, beta_moment_fn, gil_pelaez_ccdf,
                                 gil_pelaez_curve, meta_rate, meta_sir, moment_supplier)
from hybridmeta.moments import MomentEngine, Variant, rate_moment


def test_point_mass():
    fn = lambda t: np.exp(1j * np.asarray(t) * math.log(0.5))
    assert gil_pelaez_ccdf(fn, 0.3) == pytest.approx(1.0, abs=1e-6)
    assert gil_pelaez_ccdf(fn, 0.7) == pytest.approx(0.0, abs=1e-6)
    assert gil_pelaez_ccdf(fn, 0.5) == pytest.approx(0.5, abs=1e-6)


def test_beta21_inversion():
    xs = [0.25, 0.5, 0.75]
    got = gil_pelaez_curve(beta_moment_fn(2.0, 1.0), xs)
    assert got == pytest.approx([1 - x * x for x in xs], abs=1e-6)


def test_endpoints():
    fn = beta_moment_fn(2.0, 3.0)
    assert gil_pelaez_ccdf(fn, 0.0) == 1.0 and gil_pelaez_ccdf(fn, 1.0) == 0.0


def test_beta_fit_examples():
    fit = beta_fit(2 / 3, 1 / 2)
    assert (fit.shape_a, fit.shape_b) == pytest.approx((2.0, 1.0), rel=1e-12)
    fit = beta_fit(1 / 2, 1 / 3)
    assert (fit.shape_a, fit.shape_b) == pytest.approx((1.0, 1.0), rel=1e-12)
    assert isinstance(beta_fit(0.4, 0.16), Degenerate)
    with pytest.raises(ValueError):
        beta_fit(0.4, 0.5)
    with pytest.raises(ValueError):
        BetaFit(0.0, 1.0)


def test_beta_ccdf_examples():
    fit = BetaFit(2.0, 3.0)
    assert beta_ccdf(fit, 0.0) == 1.0 and beta_ccdf(fit, 1.0) == 0.0
    xs = np.linspace(0, 1, 11)
    assert np.allclose(beta_ccdf(BetaFit(1.0, 1.0), xs), 1 - xs, atol=1e-15)
    assert beta_ccdf(BetaFit(2.0, 1.0), 0.5) == pytest.approx(0.75, abs=1e-15)
    assert beta_ccdf(Degenerate(0.4), 0.3) == 1.0 and beta_ccdf(Degenerate(0.4), 0.5) == 0.0


@given(st.floats(0.02, 0.98), st.floats(0.01, 0.99))
def test_beta_mean_identity(m1, frac):
    m2 = m1 * m1 + frac * (m1 - m1 * m1)
    fit = beta_fit(m1, m2)
    assert fit.moments() == pytest.approx((m1, m2), rel=1e-9)
    area = integrate.quad(lambda x: beta_ccdf(fit, x), 0, 1, epsabs=1e-12, limit=200)[0]
    assert area == pytest.approx(m1, abs=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 30), st.floats(0.3, 30))
def test_gil_pelaez_round_trip(a, b):
    xs = np.linspace(0.05, 0.95, 10)
    gp = gil_pelaez_curve(beta_moment_fn(a, b), xs)
    assert np.max(np.abs(gp - stats.beta.sf(xs, a, b))) <= 1e-4


def test_meta_rate_zero_targets(cfg):
    xs = [0.1, 0.5, 0.9]
    for method in (Method.BETA, Method.GIL_PELAEZ):
        assert meta_rate(cfg, (0.0, 0.0, 0.0), xs, method).ccdf == pytest.approx((1.0, 1.0, 1.0), abs=1e-6)


def test_meta_rate_beta_moments(cfg):
    rates = (1e8, 1e9, 1e8)
    q1, q2 = np.real(rate_moment(np.array([1.0, 2.0]), rates, cfg))
    assert beta_fit(q1, q2).moments() == pytest.approx((q1, q2), rel=1e-9)
    xs = np.linspace(0.01, 0.99, 99)
    curve = meta_rate(cfg, rates, xs, Method.BETA)
    # trapezoid of the CCDF recovers Q1
    assert np.trapezoid(np.r_[1.0, curve.ccdf, 0.0], np.r_[0.0, xs, 1.0]) == pytest.approx(q1, abs=1e-3)


@pytest.mark.parametrize("theta", [0.1, 1.0, 10.0])
def test_gil_pelaez_raw_bounds(cfg, theta):
    xs = np.linspace(0.02, 0.98, 25)
    c = meta_sir(cfg, (theta, theta), xs, Method.GIL_PELAEZ)
    raw = np.array(c.raw)
    assert np.all(raw >= -1e-3) and np.all(raw <= 1 + 1e-3)
    assert np.all(np.diff(c.ccdf) <= 1e-4)


def test_link_suppliers(cfg):
    e = MomentEngine(cfg, 1.0, 1.0)
    for link in ("total", "sbs", "sbs-access", "mbs", "backhaul"):
        assert complex(moment_supplier(e, link)(0.0)) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ValueError):
        moment_supplier(e, "nope")


def test_variants_give_curves(cfg):
    for v in (Variant.UWAVE, Variant.MMWAVE_BACKHAUL, Variant.MIXED):
        c = meta_sir(cfg, (1.0, 1.0), [0.3, 0.6], Method.BETA, v)
        assert 0 <= c.ccdf[1] <= c.ccdf[0] <= 1
