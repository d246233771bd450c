"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict that is printed in the terminal summary
(see conftest.py), then asserts.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy import integrate, stats
from scipy.interpolate import PchipInterpolator

from conftest import ACCEPTANCE
from kmucov import cli, fading, specfun
from kmucov import coverage as cov
from kmucov.coverage import CoverageQuery, Method, NetworkModel
from kmucov.fading import INFINITE, FadingParams, special_case
from kmucov.mcsim import SimConfig, estimate_coverage

RAYLEIGH = special_case("rayleigh")
DB_GRID = np.arange(-10.0, 10.0 + 1e-9, 2.0)
T_GRID = 10.0 ** (DB_GRID / 10.0)


def record(k: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")


def same(p: FadingParams, alpha: float = 4.0, density: float = 1.0) -> NetworkModel:
    return NetworkModel(density, alpha, p, p)


def rayleigh_closed_form(T: float) -> float:
    r = math.sqrt(T)
    return 1.0 / (1.0 + r * (math.pi / 2 - math.atan(1.0 / r)))


def test_criterion_1_rayleigh_oracle():
    m = same(RAYLEIGH)
    start = time.perf_counter()
    errs = [abs(cov.coverage_exact(m, CoverageQuery(T)).value - rayleigh_closed_form(T)) for T in (0.1, 1.0, 10.0)]
    elapsed = time.perf_counter() - start
    ok = max(errs) <= 1e-8 and elapsed < 1.0
    record(1, ok, f"Rayleigh closed form, max abs err {max(errs):.2e} (tol 1e-8), {elapsed:.3f} s")
    assert ok


def test_criterion_2_analytic_vs_monte_carlo():
    laws = [FadingParams(1, 1, 1), FadingParams(2, 2, 3), FadingParams(5, 1, 2), RAYLEIGH]
    start = time.perf_counter()
    inside = total = 0
    misses = []
    for p in laws:
        for alpha in (3.0, 4.0):
            m = same(p, alpha)
            est = estimate_coverage(m, T_GRID, SimConfig(trials=1_000_000, seed=20_240_601))
            for t_db, T, e in zip(DB_GRID, T_GRID, est):
                pc = cov.coverage(m, CoverageQuery(T)).value
                hit = e.ci_low <= pc <= e.ci_high
                inside += hit
                total += 1
                if not hit:
                    misses.append((p.kappa, p.mu, p.m, alpha, t_db))
    elapsed = time.perf_counter() - start
    frac = inside / total
    ok = frac >= 0.95 and elapsed < 600
    record(2, ok, f"{inside}/{total} analytic values inside 99% CI ({frac:.1%}, need 95%), {elapsed:.0f} s")
    assert ok, misses


def test_criterion_3_exact_vs_approx_squared_error():
    cases = {
        "nakagami mu0=2": FadingParams(0, 2, INFINITE),
        "nakagami mu0=3": FadingParams(0, 3, INFINITE),
        "kappa-mu k=1 mu0=2": FadingParams(1, 2, INFINITE),
        "kappa-mu k=1 mu0=3": FadingParams(1, 3, INFINITE),
    }
    worst = 0.0
    rising = []
    for name, p in cases.items():
        m = same(p)
        sq = []
        for T in T_GRID:
            ex = cov.coverage(m, CoverageQuery(T, Method.EXACT_INTEGER_MU)).value
            ap = cov.coverage(m, CoverageQuery(T, Method.RICIAN_APPROX)).value
            sq.append((ex - ap) ** 2)
        worst = max(worst, max(sq))
        ups = [f"{DB_GRID[i]:g}->{DB_GRID[i + 1]:g} dB" for i in range(len(sq) - 1) if sq[i + 1] > sq[i]]
        if ups:
            rising.append(f"{name} rises {', '.join(ups)}")
    bounded = worst <= 1e-3
    ok = bounded and not rising
    detail = f"max squared error {worst:.2e} (tol 1e-3, {'ok' if bounded else 'exceeded'})"
    detail += "; non-increasing in T" if not rising else "; NOT non-increasing: " + "; ".join(rising)
    record(3, ok, detail)
    assert bounded
    assert not rising


def test_criterion_4_non_integer_mu():
    p = special_case("nakagami", 2.5)
    m = same(p)
    ts_db = [-5.0, 0.0, 5.0]
    ts = [10 ** (t / 10) for t in ts_db]
    est = estimate_coverage(m, ts, SimConfig(trials=1_000_000, seed=77))
    gaps = []
    ok = True
    for T, e in zip(ts, est):
        res = cov.coverage(m, CoverageQuery(T))
        assert res.method is Method.RICIAN_APPROX
        gap = abs(res.value - e.p_hat)
        tol = max(e.half_width, 0.01)
        gaps.append(f"{gap:.4f}<= {tol:.4f}")
        ok &= gap <= tol
    record(4, ok, "Nakagami 2.5 approx vs MC at -5/0/5 dB: " + ", ".join(gaps))
    assert ok


def test_criterion_5_weight_tail_decay():
    p = FadingParams(2, 2, 3)
    ratios = [fading.tail_mass(p, n + 10) / fading.tail_mass(p, n) for n in range(10, 61)]
    geo = fading.tail_mass(FadingParams(1, 1, 1), 9)
    ok = max(ratios) <= 0.5 and abs(geo - 2.0**-10) <= 1e-12
    record(5, ok, f"max tail ratio over 10 terms {max(ratios):.3e} (<= 0.5); geometric tail err {abs(geo - 2**-10):.1e}")
    assert ok


def test_criterion_6_derivative_engine():
    worst1 = worst3 = worst_bell = 0.0
    models = [
        NetworkModel(1.0, 4.0, FadingParams(2, 2, 3), FadingParams(2, 2, 3)),
        NetworkModel(1.0, 3.0, FadingParams(2, 2, 3), FadingParams(5, 1, 2)),
        NetworkModel(1.0, 4.0, FadingParams(1, 3, INFINITE), RAYLEIGH),
    ]
    for m in models:
        for T in (0.1, 1.0, 10.0):
            c = cov.g_taylor(T, m, order=8).coeffs
            G = lambda s: cov.g_function(s, T, m)  # noqa: E731
            h = 1e-5
            d1 = (G(1 + h) - G(1 - h)) / (2 * h)
            worst1 = max(worst1, abs(d1 / c[1] - 1))
            h = 2e-3
            d3 = (G(1 + 2 * h) - 2 * G(1 + h) + 2 * G(1 - h) - G(1 - 2 * h)) / (2 * h**3)
            worst3 = max(worst3, abs(d3 / (6 * c[3]) - 1))
            series = specfun.PowerSeries(c)
            recip = specfun.series_reciprocal(series)
            derivs = [series.derivative(j) for j in range(9)]
            for n in range(9):
                ref = specfun.reciprocal_derivatives_faa_di_bruno(derivs, n)
                worst_bell = max(worst_bell, abs(recip.derivative(n) / ref - 1))
    ok = worst1 <= 1e-6 and worst3 <= 1e-4 and worst_bell <= 1e-10
    record(6, ok, f"k=1 rel {worst1:.1e} (1e-6), k=3 rel {worst3:.1e} (1e-4), reciprocal vs Bell rel {worst_bell:.1e} (1e-10)")
    assert ok


def test_criterion_7_density_invariance():
    worst = 0.0
    for p, alpha in [(FadingParams(2, 2, 3), 4.0), (FadingParams(5, 1, 2), 3.0), (special_case("nakagami", 2.5), 4.0)]:
        for T in (0.1, 1.0, 10.0):
            base = cov.coverage(same(p, alpha, 1.0), CoverageQuery(T)).value
            for lam in (0.1, 10.0):
                v = cov.coverage(same(p, alpha, lam), CoverageQuery(T)).value
                worst = max(worst, abs(v / base - 1))
    p = FadingParams(2, 2, 3)
    ts = [0.5, 2.0]
    a = estimate_coverage(same(p, density=1.0), ts, SimConfig(trials=200_000, seed=31))
    b = estimate_coverage(same(p, density=10.0), ts, SimConfig(trials=200_000, seed=32))
    mc_ok = all(abs(x.p_hat - y.p_hat) <= x.half_width + y.half_width for x, y in zip(a, b))
    ok = worst <= 1e-12 and mc_ok
    record(7, ok, f"analytic rel change under x0.1/x10 density {worst:.1e} (1e-12); MC at two densities overlap: {mc_ok}")
    assert ok


def _numeric_cdf(p: FadingParams):
    grid = np.concatenate(([0.0], np.geomspace(1e-4, 40, 600)))
    pieces = [integrate.quad(lambda g: fading.pdf(p, g), a, b, epsabs=1e-13)[0] for a, b in zip(grid, grid[1:])]
    cdf = np.concatenate(([0.0], np.cumsum(pieces)))
    return PchipInterpolator(grid, np.minimum(cdf, 1.0), extrapolate=True)


def test_criterion_8_distributional_checks():
    pvals = []
    for i, params in enumerate([(1.5, 2, 4), (2, 2, 3), (0.5, 3.5, 0.7)]):
        p = FadingParams(*params)
        x = fading.sample_power(p, np.random.default_rng(500 + i), 20_000)
        pvals.append(stats.kstest(x, _numeric_cdf(p)).pvalue)
    pvals2 = []
    for i, params in enumerate([(1, 1, 1), (2, 2, 3), (5, 1, 2), (1, 3, INFINITE)]):
        p = FadingParams(*params)
        a = fading.sample_power(p, np.random.default_rng(600 + i), 100_000)
        b = fading.sample_power_physical(p, np.random.default_rng(700 + i), 100_000)
        pvals2.append(stats.ks_2samp(a, b).pvalue)
    ok = min(pvals) > 0.01 and min(pvals2) > 0.01
    record(8, ok, f"KS vs CDF min p {min(pvals):.3f}; mixture vs physical min p {min(pvals2):.3f} (need > 0.01)")
    assert ok


CMP_CFG = """\
[network]
alpha = 3.5
lambda = 2

[desired]
kind = kappa_mu_shadowed
kappa = 2
mu = 2
m = 3

[interferer]
kind = kappa_mu_shadowed
kappa = 5
mu = 1
m = 2

[sweep]
t_db_start = -10
t_db_stop = 10
t_db_step = 5

[sim]
trials = 50000
seed = 4242
"""


def test_criterion_9_determinism(tmp_path):
    cfg = tmp_path / "det.cfg"
    cfg.write_text(CMP_CFG)
    outs = []
    for i, workers in enumerate(("1", "1", "3")):
        out = tmp_path / f"run{i}.csv"
        assert cli.main(["compare", "--config", str(cfg), "--out", str(out), "--workers", workers]) == 0
        outs.append(out.read_bytes())
    same_runs = outs[0] == outs[1]
    same_workers = outs[0] == outs[2]
    ok = same_runs and same_workers
    record(9, ok, f"compare CSV identical across runs: {same_runs}; 1 vs 3 workers: {same_workers}")
    assert ok
