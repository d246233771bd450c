from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from kmucov import mcsim
from kmucov.coverage import CoverageQuery, NetworkModel, coverage
from kmucov.errors import DomainError
from kmucov.fading import FadingParams, special_case
from kmucov.mcsim import SimConfig, estimate_coverage

RAYLEIGH = special_case("rayleigh")
KMS = FadingParams(2.0, 2.0, 3.0)


def model(desired=RAYLEIGH, interferer=None, alpha=4.0, density=1.0):
    return NetworkModel(density, alpha, desired, desired if interferer is None else interferer)


# -- configuration ------------------------------------------------------------

@pytest.mark.parametrize(
    "kw",
    [dict(trials=0), dict(seed=-1), dict(seed=2**64), dict(min_expected_points=0), dict(ci_level=1.0),
     dict(far_field="clip"), dict(workers=0)],
)
def test_sim_config_validation(kw):
    with pytest.raises(DomainError):
        SimConfig(**kw)


def test_window_sizing():
    cfg = SimConfig(min_expected_points=120)
    assert cfg.expected_points(2.0) == 150  # rounded up to whole annuli
    assert 2.0 * math.pi * cfg.radius(2.0) ** 2 == pytest.approx(150)
    big = SimConfig(window_radius=20.0)
    assert big.expected_points(1.0) >= math.pi * 400
    with pytest.raises(DomainError):
        SimConfig(window_radius=1.0).expected_points(1.0)


@pytest.mark.parametrize("k,n", [(0, 50), (50, 50), (7, 200), (9_000, 10_000)])
def test_wilson_vs_scipy(k, n):
    ref = stats.binomtest(k, n).proportion_ci(0.99, method="wilson")
    lo, hi = mcsim.wilson_interval(k, n, 0.99)
    assert lo == pytest.approx(ref.low, abs=1e-12)
    assert hi == pytest.approx(ref.high, abs=1e-12)


def test_far_field_mean():
    # 2 pi lambda int_R^inf r^(1-alpha) dr = pi lambda R^-2 at alpha = 4
    m = model(density=0.5)
    assert mcsim.far_field_mean(m, 3.0) == pytest.approx(math.pi * 0.5 / 9)


# -- point process ------------------------------------------------------------

def test_ppp_count_dispersion():
    rng = np.random.default_rng(1)
    lam, R = 1.0, math.sqrt(2000 / math.pi)
    counts = np.array([len(mcsim.sample_ppp(lam, R, rng)[0]) for _ in range(2_000)])
    # index-of-dispersion test for Poisson counts
    disp = np.sum((counts - 2000.0) ** 2) / 2000.0
    lo, hi = stats.chi2.ppf([0.005, 0.995], counts.size)
    assert lo < disp < hi
    assert abs(counts.mean() - 2000) < 3 * math.sqrt(2000 / counts.size)


def test_ppp_nearest_distance_and_isotropy():
    rng = np.random.default_rng(2)
    lam, R = 0.3, math.sqrt(2000 / (0.3 * math.pi))
    nearest, angles = [], []
    for _ in range(3_000):
        pts, _ = mcsim.sample_ppp(lam, R, rng)
        d = np.hypot(pts[:, 0], pts[:, 1])
        nearest.append(d.min())
        angles.append(np.arctan2(pts[0, 1], pts[0, 0]) % (2 * math.pi))
    assert stats.kstest(nearest, lambda r: 1 - np.exp(-lam * math.pi * r**2)).pvalue > 0.01
    assert stats.kstest(angles, stats.uniform(0, 2 * math.pi).cdf).pvalue > 0.01


def test_ppp_resamples_empty_draws():
    rng = np.random.default_rng(3)
    total = 0
    for _ in range(50):
        pts, res = mcsim.sample_ppp(1.0, 0.1, rng)
        assert len(pts) >= 1
        total += res
    assert total > 0


def test_ppp_domain():
    with pytest.raises(DomainError):
        mcsim.sample_ppp(0.0, 1.0, np.random.default_rng(0))


# -- SIR ----------------------------------------------------------------------

def test_single_point_is_infinite():
    assert mcsim.sir_from_powers(1.0, 1.0, np.array([]), np.array([]), 4.0) == math.inf


def test_sir_from_powers_value():
    sir = mcsim.sir_from_powers(1.0, 2.0, np.array([2.0, 3.0]), np.array([1.0, 4.0]), 4.0, far_mean=0.1)
    assert sir == pytest.approx(2.0 / (1 / 16 + 4 / 81 + 0.1))


def test_sir_trial_matches_batch_engine():
    m = model(KMS)
    cfg = SimConfig(trials=1)
    rng = np.random.default_rng(9)
    slow = np.array([mcsim.sir_trial(m, cfg, rng) for _ in range(4_000)])
    fast, _ = mcsim._batch_sir(m, cfg, 0, 8_192)
    assert np.all(slow > 0) and np.all(np.isfinite(slow))
    assert stats.ks_2samp(np.log(slow), np.log(fast)).pvalue > 0.01


# -- estimator ----------------------------------------------------------------

def test_estimate_basic_properties():
    ts = [1e-6, 0.1, 1.0, 10.0, 100.0]
    est = estimate_coverage(model(KMS), ts, SimConfig(trials=20_000, seed=4))
    assert est[0].p_hat == pytest.approx(1.0, abs=1e-3)
    p = [e.p_hat for e in est]
    assert all(b <= a for a, b in zip(p, p[1:]))
    for e in est:
        assert e.ci_low <= e.p_hat <= e.ci_high
        assert e.trials == 20_000 and e.seed == 4


def test_estimate_rejects_bad_thresholds():
    with pytest.raises(DomainError):
        estimate_coverage(model(), [], SimConfig(trials=10))
    with pytest.raises(DomainError):
        estimate_coverage(model(), [0.0], SimConfig(trials=10))


def test_determinism_across_runs_and_workers():
    m = model(KMS, FadingParams(5, 1, 2), alpha=3.0)
    ts = [0.1, 1.0, 10.0]
    a = estimate_coverage(m, ts, SimConfig(trials=30_000, seed=123))
    b = estimate_coverage(m, ts, SimConfig(trials=30_000, seed=123))
    c = estimate_coverage(m, ts, SimConfig(trials=30_000, seed=123, workers=3))
    assert a == b == c
    d = estimate_coverage(m, ts, SimConfig(trials=30_000, seed=124))
    assert a != d


def test_rayleigh_monte_carlo_oracle():
    m = model()
    est = estimate_coverage(m, [1.0], SimConfig(trials=1_000_000, seed=10))[0]
    assert est.ci_low <= 0.5600991535115574 <= est.ci_high


def test_kms_monte_carlo_oracle():
    m = model(KMS)
    exact = coverage(m, CoverageQuery(1.0)).value
    est = estimate_coverage(m, [1.0], SimConfig(trials=1_000_000, seed=11))[0]
    assert abs(est.p_hat - exact) <= est.half_width


@pytest.mark.parametrize("alpha", [3.0, 4.0])
def test_window_doubling(alpha):
    m = model(alpha=alpha)
    small = estimate_coverage(m, [1.0], SimConfig(trials=1_000_000, seed=12))[0]
    large = estimate_coverage(m, [1.0], SimConfig(trials=1_000_000, seed=12, min_expected_points=800))[0]
    assert abs(small.p_hat - large.p_hat) < small.half_width


def test_density_scaling():
    ts = [0.5, 2.0]
    a = estimate_coverage(model(KMS, density=1.0), ts, SimConfig(trials=100_000, seed=13))
    b = estimate_coverage(model(KMS, density=2.0), ts, SimConfig(trials=100_000, seed=14))
    for x, y in zip(a, b):
        assert abs(x.p_hat - y.p_hat) <= x.half_width + y.half_width


def test_estimator_coverage_over_seeds():
    m = model()
    truth = 0.5600991535115574
    hits = 0
    for seed in range(200):
        e = estimate_coverage(m, [1.0], SimConfig(trials=2_000, seed=1_000 + seed))[0]
        hits += e.ci_low <= truth <= e.ci_high
    assert hits >= 192
