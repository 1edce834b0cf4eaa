"""Acceptance checks for the frozen default configuration.

Shared by ``hybridmeta validate`` and the test suite.  Each criterion is a
list of named sub-checks; a criterion passes only if all of them do.
Monte Carlo inputs are computed once per :class:`AcceptanceRunner`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import mcsim
from .association import a1_three_piece, assoc_probs, closed_form_a1
from .metadist import Method, beta_moment_fn, gil_pelaez_curve, meta_rate, meta_sir
from .model import NetworkConfig, db_to_lin, replace_path
from .moments import (EvalPath, MomentEngine, MomentQuery, Variant, mean_local_delay, moment_backhaul,
                      moment_total, rate_moment)
from .specfun import (erf, gauss_2f1, generalized_binomial, kummer_1f1, pochhammer, reg_inc_beta,
                      upper_gamma_ratio)

__all__ = ["Check", "CriterionResult", "AcceptanceRunner", "SPECFUN_ORACLES"]

# Reference values computed with mpmath at 30 digits.
SPECFUN_ORACLES = {
    "gauss_2f1": [
        ((1.0, -0.5, 0.5, -1.0), complex(1.7853981633974483096, 0.0)),
        ((2.0, -0.5, 0.5, -10.0), complex(7.4526855303819465972, 0.0)),
        ((0.5, -2.0 / 3.0, 1.0 / 3.0, -3.0), complex(3.2211597147784873064, 0.0)),
        ((1j, -0.5, 0.5, -1.0), complex(1.1035939838246216575, 0.86300099658726180314)),
        ((5j, -0.5, 0.5, -0.1), complex(1.0390009023451781891, 0.48824937367234647024)),
        ((50j, -0.5, 0.5, -10.0), complex(27.949520097708103542, 28.085286611116923997)),
        ((-1.0, -0.5, 0.5, -0.1), complex(0.9, 0.0)),
        ((-2.0, -2.0 / 3.0, 1.0 / 3.0, -0.5), complex(-1.125, 0.0)),
        ((1.5 + 2j, -0.5, 0.5, -100.0), complex(23.813872460535862743, 13.118632354159913064)),
        ((300j, -0.5, 0.5, -1000.0), complex(686.18356346441840517, 686.75326333887226132)),
    ],
    "kummer_1f1": [
        ((1.0, 2.0, -3.0), 0.31673764387737868567),
        ((1.0, 2.0, -0.01), 0.99501662508319464251),
        ((2.0, 3.0, 1.5), 2.88075069792802881),
        ((1.0, 2.0, -50.0), 0.02),
    ],
    "upper_gamma_ratio": [
        ((1, 0.5), 0.6065306597126334236),
        ((2, 1.0), 0.73575888234288464319),
        ((3, 2.5), 0.543813115883329518),
        ((5, 10.0), 0.029252688076961072673),
    ],
    "reg_inc_beta": [
        ((0.3, 2.0, 1.0), 0.09),
        ((0.5, 0.5, 0.5), 0.5),
        ((0.9, 3.5, 1.2), 0.76850954567877026223),
        ((0.05, 10.0, 2.0), 1.0253906250000005665e-12),
    ],
    "erf": [
        ((0.1,), 0.1124629160182848984),
        ((1.0,), 0.84270079294971486934),
        ((2.5,), 0.99959304798255504106),
    ],
    "pochhammer": [
        ((0.5, 5), complex(29.53125, 0.0)),
        ((2j, 4), complex(-28.0, -36.0)),
        ((-1.5, 3), complex(0.375, 0.0)),
        ((1 + 1j, 80), complex(-3.0625484062231120816e117, -1.3633681871953885429e119)),
    ],
    "generalized_binomial": [
        ((0.5, 3), complex(0.0625, 0.0)),
        ((1j, 5), complex(0.33333333333333333333, -0.083333333333333333333)),
        ((-1.0, 4), complex(1.0, 0.0)),
        ((2.5, 100), complex(-1.1056547675758021315e-7, 0.0)),
    ],
}

_SPECFUN = {
    "gauss_2f1": gauss_2f1,
    "kummer_1f1": kummer_1f1,
    "upper_gamma_ratio": upper_gamma_ratio,
    "reg_inc_beta": reg_inc_beta,
    "erf": erf,
    "pochhammer": pochhammer,
    "generalized_binomial": generalized_binomial,
}

META_THETAS = (10.0, 1.0, 0.1)
HYBRID_TARGETS = (0.18, 0.51, 0.96)
UWAVE_TARGETS = (0.23, 0.72, 0.98)
UWAVE_LINK = "sbs-access"
X_BAND = tuple(np.round(np.linspace(0.05, 0.95, 19), 10))


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def line(self) -> str:
        failed = [c.name for c in self.checks if not c.passed]
        tail = "all sub-checks ok" if not failed else "failed: " + ", ".join(failed)
        return f"{'PASS' if self.passed else 'FAIL'}  criterion {self.number} ({self.title}): {tail}"

    def report(self) -> str:
        rows = [self.line()]
        rows += [f"    [{'ok' if c.passed else 'x '}] {c.name}: {c.detail}" for c in self.checks]
        return "\n".join(rows)


def _fmt(vals) -> str:
    return "[" + ", ".join(f"{v:.4f}" for v in vals) + "]"


class AcceptanceRunner:
    """Evaluates the eight acceptance criteria on a configuration (default: frozen defaults)."""

    def __init__(self, cfg: NetworkConfig | None = None, *, mc: bool = True, realizations: int = 100_000,
                 seed: int = 20240601, workers: int = 1, rayleigh_realizations: int = 20_000):
        self.cfg = cfg or NetworkConfig()
        self.mc = mc
        self.n = realizations
        self.n_rayleigh = rayleigh_realizations
        self.seed = seed
        self.workers = workers
        self._hybrid_mc = None

    # ------------------------------------------------------------ shared MC

    def hybrid_samples(self):
        if self._hybrid_mc is None:
            sets = [(t, t) for t in META_THETAS]
            self._hybrid_mc = mcsim.run_many(self.cfg, sets, self.n, self.seed, workers=self.workers)
        return self._hybrid_mc

    # -------------------------------------------------------------- criteria

    def criterion1(self) -> CriterionResult:
        res = CriterionResult(1, "hybrid meta distribution")
        cfg = self.cfg
        xs = list(X_BAND)
        i03 = xs.index(0.3)
        gp_curves, sups, at03 = [], [], []
        for th in META_THETAS:
            gp = np.array(meta_sir(cfg, (th, th), xs, Method.GIL_PELAEZ).ccdf)
            bt = np.array(meta_sir(cfg, (th, th), xs, Method.BETA).ccdf)
            gp_curves.append(gp)
            sups.append(float(np.max(np.abs(gp - bt))))
            at03.append(gp[i03])
        dev = [abs(a - b) for a, b in zip(at03, HYBRID_TARGETS)]
        res.checks.append(Check("F(0.3) vs reference values", max(dev) <= 0.05,
                                f"got {_fmt(at03)} for theta {META_THETAS}, target {HYBRID_TARGETS} +-0.05"))
        res.checks.append(Check("Gil-Pelaez vs Beta sup-norm", max(sups) <= 0.02,
                                f"sup |GP-Beta| per theta {_fmt(sups)} (limit 0.02)"))
        if self.mc:
            zmax = []
            for gp, s in zip(gp_curves, self.hybrid_samples()):
                emp = np.array(mcsim.empirical_meta(s, xs).ccdf)
                se = np.sqrt(np.maximum(gp * (1 - gp), 1.0 / len(s)) / len(s))
                zmax.append(float(np.max(np.abs(emp - gp) / se)))
            res.checks.append(Check("Monte Carlo within 3 sigma", max(zmax) <= 3.0,
                                    f"max |z| per theta {_fmt(zmax)} at n={self.n}"))
        return res

    def criterion2(self) -> CriterionResult:
        res = CriterionResult(2, "variance peak")
        db = np.arange(-15, 16)
        m1, var = [], []
        for d in db:
            th = db_to_lin(float(d))
            m = np.real(MomentEngine(self.cfg, th, th)(np.array([1.0, 2.0])))
            m1.append(m[0])
            var.append(m[1] - m[0] ** 2)
        i = int(np.argmax(var))
        res.checks.append(Check("variance argmax at -3 dB +-1", abs(db[i] + 3) <= 1,
                                f"peak at {db[i]} dB (variance {var[i]:.4f})"))
        res.checks.append(Check("M1 at the peak 0.49 +-0.03", abs(m1[i] - 0.49) <= 0.03, f"M1 = {m1[i]:.4f}"))
        return res

    def criterion3(self) -> CriterionResult:
        res = CriterionResult(3, "Rayleigh exactness")
        if not self.mc:
            res.checks.append(Check("Monte Carlo", False, "skipped (analytic-only run)"))
            return res
        cfg = replace_path(replace_path(self.cfg, "mmwave.m_los", 1), "mmwave.m_nlos", 1)
        db = np.arange(-15, 16, 3)
        z1, zv = [], []
        for k, d in enumerate(db):
            th = db_to_lin(float(d))
            m = np.real(MomentEngine(cfg, th, th)(np.array([1.0, 2.0])))
            s = mcsim.run(cfg, (th, th), self.n_rayleigh, self.seed + 1000 + k, workers=self.workers)
            e1, se1 = mcsim.empirical_moment(s, 1)
            ev, sev = mcsim.empirical_variance(s)
            z1.append((e1.real - m[0]) / se1)
            zv.append((ev - (m[1] - m[0] ** 2)) / sev)
        for name, z in (("M1", z1), ("variance", zv)):
            z = np.asarray(z)
            res.checks.append(Check(f"{name} within 3 sigma", bool(np.all(np.abs(z) <= 3)),
                                    f"z over {len(db)} thetas: max |z| {np.max(np.abs(z)):.2f}"))
            pos = int(np.sum(z > 0))
            p = float(stats.binomtest(pos, len(z)).pvalue)
            res.checks.append(Check(f"{name} sign test p > 0.01", p > 0.01, f"{pos}/{len(z)} positive, p = {p:.3f}"))
        return res

    def criterion4(self) -> CriterionResult:
        res = CriterionResult(4, "hybrid mean local delay")
        th = db_to_lin(-10.0)
        vals = []
        for lam_km in (20, 40, 60, 80, 100):
            cfg = replace_path(self.cfg, "small.density_lambda2", lam_km * 1e-6)
            r = mean_local_delay((th, th), cfg)
            vals.append(math.inf if r.diverged else float(np.real(r.value)))
        pole = 1.0 / (1.0 - th)
        ok = all(abs(v - 1.11) <= 0.02 for v in vals)
        res.checks.append(Check("M_-1 = 1.11 +-0.02 for lambda2 in 20..100 /km2", ok,
                                f"values {_fmt(vals)}"))
        bh = float(np.real(moment_backhaul(-1.0, th, self.cfg.macro.ple_alpha1)))
        res.checks.append(Check("backhaul M_-1 equals 1/(1 - theta2)", abs(bh - pole) <= 1e-9,
                                f"{bh:.10f} vs {pole:.10f}"))
        return res

    def criterion5(self) -> CriterionResult:
        res = CriterionResult(5, "microwave-only meta distribution")
        xs = list(X_BAND)
        i03 = xs.index(0.3)
        at03, sups = [], []
        for th in META_THETAS:
            gp = np.array(meta_sir(self.cfg, (th, th), xs, Method.GIL_PELAEZ, Variant.UWAVE, UWAVE_LINK).ccdf)
            bt = np.array(meta_sir(self.cfg, (th, th), xs, Method.BETA, Variant.UWAVE, UWAVE_LINK).ccdf)
            at03.append(gp[i03])
            sups.append(float(np.max(np.abs(gp - bt))))
        dev = [abs(a - b) for a, b in zip(at03, UWAVE_TARGETS)]
        res.checks.append(Check("F(0.3) vs reference values", max(dev) <= 0.05,
                                f"SBS access link: {_fmt(at03)}, target {UWAVE_TARGETS} +-0.05"))
        res.checks.append(Check("Gil-Pelaez vs Beta sup-norm", max(sups) <= 0.02,
                                f"sup |GP-Beta| per theta {_fmt(sups)} (limit 0.02)"))
        return res

    def criterion6(self) -> CriterionResult:
        res = CriterionResult(6, "association")
        rng = np.random.default_rng(self.seed)
        sums, gaps = [], []
        for _ in range(20):
            cfg = self.cfg
            for path, val in (
                ("macro.density_lambda1", rng.uniform(1, 10) * 1e-6),
                ("small.density_lambda2", rng.uniform(10, 150) * 1e-6),
                ("small.bias_b2", db_to_lin(rng.uniform(0, 20))),
                ("small.n_antenna_elements", int(rng.integers(4, 65))),
                ("mmwave.los_ball_d", rng.uniform(50, 300)),
                ("mmwave.p_los", rng.uniform(0.5, 1.0)),
                ("mmwave.p_nlos", rng.uniform(0.5, 1.0)),
            ):
                cfg = replace_path(cfg, path, val)
            ap = assoc_probs(cfg)
            a1 = a1_three_piece(cfg)
            sums.append(abs(a1 + ap.a2_los + ap.a2_nlos - 1.0))
            gaps.append(abs(closed_form_a1(cfg) - a1))
        res.checks.append(Check("A1 + A2L + A2N = 1 within 1e-6", max(sums) <= 1e-6,
                                f"max deviation {max(sums):.2e} over 20 random configs"))
        res.checks.append(Check("closed-form A1 vs quadrature within 1e-6", max(gaps) <= 1e-6,
                                f"max gap {max(gaps):.2e}"))
        if self.mc:
            s = self.hybrid_samples()[0]
            n = len(s)
            freq = s.association_counts() / n
            ap = assoc_probs(self.cfg)
            ref = np.array([ap.a1, ap.a2_los, ap.a2_nlos])
            z = np.abs(freq - ref) / np.sqrt(np.maximum(ref * (1 - ref), 1.0 / n) / n)
            res.checks.append(Check("Monte Carlo frequencies within 3 binomial sigma", bool(np.all(z <= 3)),
                                    f"freq {_fmt(freq)} vs {_fmt(ref)}, |z| {_fmt(z)}"))
        return res

    def criterion7(self) -> CriterionResult:
        res = CriterionResult(7, "property suite")
        cfg = self.cfg
        thetas = (0.1, 1.0, 10.0)
        variants = (Variant.HYBRID, Variant.UWAVE, Variant.MMWAVE_BACKHAUL)
        m0, mono, order, mag = [], [], [], []
        b_grid = np.linspace(0.0, 5.0, 21)
        t_grid = np.linspace(0.0, 200.0, 401)
        for v in variants:
            for th in thetas:
                e = MomentEngine(cfg, th, th, variant=v)
                m0.append(abs(e(0.0) - 1.0))
                mb = np.real(e(b_grid))
                mono.append(float(np.max(np.diff(mb))))
                m1, m2 = mb[4], mb[8]
                order.append(max(m1 * m1 - m2, m2 - m1))
                mag.append(float(np.max(np.abs(e(1j * t_grid)))))
        res.checks.append(Check("M0 = 1 to 1e-8", max(m0) <= 1e-8, f"max |M0 - 1| {max(m0):.1e}"))
        res.checks.append(Check("M_b nonincreasing in b >= 0", max(mono) <= 1e-12,
                                f"largest increment {max(mono):.1e}"))
        res.checks.append(Check("M1^2 <= M2 <= M1", max(order) <= 1e-12, f"largest violation {max(order):.1e}"))
        res.checks.append(Check("|M_jt| <= 1", max(mag) <= 1 + 1e-12, f"max {max(mag):.12f}"))
        xs = np.linspace(0.02, 0.98, 49)
        rt = 0.0
        for a, b in ((2.0, 1.0), (0.5, 0.5), (5.0, 3.0), (0.3, 4.0), (40.0, 2.0)):
            gp = gil_pelaez_curve(beta_moment_fn(a, b), xs)
            rt = max(rt, float(np.max(np.abs(gp - stats.beta.sf(xs, a, b)))))
        res.checks.append(Check("Beta round trip through Gil-Pelaez to 1e-4", rt <= 1e-4, f"sup error {rt:.1e}"))
        sd = 0.0
        for v in (Variant.HYBRID, Variant.UWAVE):
            for th in thetas:
                for b in (1.0, 2.0, 0.5j, -1.0 if th < 1 else 3.0):
                    s = moment_total(MomentQuery(b, th, th, v, EvalPath.SERIES), cfg).value
                    d = moment_total(MomentQuery(b, th, th, v, EvalPath.DIRECT), cfg).value
                    sd = max(sd, abs(s - d) / max(1.0, abs(d)))
        res.checks.append(Check("series vs direct quadrature to 1e-6", sd <= 1e-6, f"max gap {sd:.1e}"))
        worst, where = 0.0, ""
        for name, cases in SPECFUN_ORACLES.items():
            fn = _SPECFUN[name]
            for args, ref in cases:
                got = complex(fn(*args))
                err = abs(got - ref) / max(abs(ref), 1e-300)
                if err > worst:
                    worst, where = err, f"{name}{args}"
        res.checks.append(Check("special functions vs frozen oracles to 1e-10", worst <= 1e-10,
                                f"worst relative error {worst:.1e} at {where}"))
        return res

    def criterion8(self) -> CriterionResult:
        res = CriterionResult(8, "rate meta distribution trend")
        xs = np.linspace(0.1, 0.9, 17)
        rate = 1e9
        curves, q1 = [], []
        for n in (10, 20, 40, 50):
            cfg = replace_path(self.cfg, "small.n_antenna_elements", n)
            curves.append(np.array(meta_rate(cfg, (rate, rate, rate), xs, Method.BETA).ccdf))
            q1.append(float(np.real(rate_moment(1.0, (rate, rate, rate), cfg))))
        drops = [float(np.max(curves[k] - curves[k + 1])) for k in range(len(curves) - 1)]
        res.checks.append(Check("F nondecreasing in N on x in [0.1, 0.9]", max(drops) <= 1e-9,
                                f"largest decrease per step {_fmt(drops)}; Q1 per N {_fmt(q1)}; "
                                f"F(0.1) per N {_fmt([c[0] for c in curves])}"))
        return res

    def run_all(self) -> list[CriterionResult]:
        return [getattr(self, f"criterion{k}")() for k in range(1, 9)]
