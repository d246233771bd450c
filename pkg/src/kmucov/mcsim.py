"""Monte Carlo SIR simulation of the Poisson downlink network.

Each trial places a PPP in a disk around the typical user, serves the user
from the nearest point and sums the interference of all others.  Draws come
from counter-based Philox streams keyed by ``seed`` and addressed by
``(stream, batch)``, so results do not depend on how batches are spread
across workers.

The disk is cut into annuli of fixed expected point count
(``ANNULUS_POINTS``), each with its own stream.  Enlarging the window only
appends annuli; the inner field of every trial is unchanged.  Interference
from beyond the window is replaced by its mean unless ``far_field="drop"``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .coverage import NetworkModel
from .errors import DomainError
from .fading import MixtureSampler

BATCH_SIZE = 8192
ANNULUS_POINTS = 50
_DESIRED_STREAM = 0
_RESAMPLE_STREAM = 1 << 32


def philox_stream(seed: int, stream: int, batch: int) -> np.random.Generator:
    """Generator over the Philox block sequence starting at counter ``(0, 0, stream, batch)``."""
    bitgen = np.random.Philox(key=int(seed) & (2**64 - 1), counter=[0, 0, stream, batch])
    return np.random.Generator(bitgen)


@dataclass(frozen=True)
class SimConfig:
    trials: int = 100_000
    seed: int = 0
    min_expected_points: float = 200.0
    ci_level: float = 0.99
    window_radius: float | None = None
    far_field: str = "mean"
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if not self.min_expected_points > 0:
            raise DomainError("min_expected_points must be > 0")
        if not 0 < self.ci_level < 1:
            raise DomainError("ci_level must lie in (0, 1)")
        if self.far_field not in ("mean", "drop"):
            raise DomainError("far_field must be 'mean' or 'drop'")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")

    def expected_points(self, density: float) -> float:
        """Expected PPP count in the window, rounded up to whole annuli."""
        n = self.min_expected_points
        if self.window_radius is not None:
            n_r = density * math.pi * self.window_radius**2
            if n_r < self.min_expected_points:
                raise DomainError(
                    f"window radius {self.window_radius} holds {n_r:.1f} expected points,"
                    f" below min_expected_points={self.min_expected_points}"
                )
            n = n_r
        return ANNULUS_POINTS * math.ceil(n / ANNULUS_POINTS)

    def radius(self, density: float) -> float:
        return math.sqrt(self.expected_points(density) / (math.pi * density))


@dataclass(frozen=True)
class SimEstimate:
    threshold: float
    p_hat: float
    ci_low: float
    ci_high: float
    trials: int
    seed: int
    resamples: int = 0

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)


def wilson_interval(successes: int, n: int, level: float) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    z = NormalDist().inv_cdf(0.5 + level / 2)
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def far_field_mean(model: NetworkModel, radius: float) -> float:
    """Mean interference from PPP points beyond ``radius``."""
    a = model.alpha
    return 2 * math.pi * model.density * model.interferer.mean_power * radius ** (2 - a) / (a - 2)


def sample_ppp(lam: float, R: float, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Homogeneous PPP in the disk of radius ``R``; empty draws are redrawn.

    Returns the ``(n, 2)`` point array and the number of redraws.
    """
    if not lam > 0 or not R > 0:
        raise DomainError("lambda and R must be > 0")
    resamples = 0
    while True:
        n = rng.poisson(lam * math.pi * R * R)
        if n > 0:
            break
        resamples += 1
    r = R * np.sqrt(rng.random(n))
    theta = 2 * math.pi * rng.random(n)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta))), resamples


def sir_from_powers(
    r0: float, g0: float, r_int: np.ndarray, g_int: np.ndarray, alpha: float, far_mean: float = 0.0
) -> float:
    """SIR of a user served at distance ``r0``; ``inf`` if nothing interferes."""
    interference = float(np.sum(g_int * np.power(r_int, -alpha))) + far_mean
    if interference <= 0:
        return math.inf
    return g0 * r0**-alpha / interference


def sir_trial(model: NetworkModel, cfg: SimConfig, rng: np.random.Generator) -> float:
    """One SIR draw; realizations without an in-window interferer are redrawn."""
    R = cfg.radius(model.density)
    far = far_field_mean(model, R) if cfg.far_field == "mean" else 0.0
    desired = MixtureSampler(model.desired)
    interferer = MixtureSampler(model.interferer)
    while True:
        pts, _ = sample_ppp(model.density, R, rng)
        if len(pts) >= 2:
            break
    dist = np.hypot(pts[:, 0], pts[:, 1])
    i0 = int(np.argmin(dist))
    r_int = np.delete(dist, i0)
    return sir_from_powers(
        dist[i0], float(desired(rng)), r_int, interferer(rng, r_int.size), model.alpha, far
    )


def _batch_sir(model: NetworkModel, cfg: SimConfig, batch: int, size: int) -> tuple[np.ndarray, int]:
    n_total = cfg.expected_points(model.density)
    n_annuli = int(round(n_total / ANNULUS_POINTS))
    half_alpha = 0.5 * model.alpha
    # work in the measure u = lambda pi r^2; path loss is (u / (lambda pi))^(-alpha/2)
    scale = (math.pi * model.density) ** half_alpha
    far = far_field_mean(model, cfg.radius(model.density)) if cfg.far_field == "mean" else 0.0
    interferer = MixtureSampler(model.interferer)

    geometry = []
    nearest = np.full(size, np.inf)
    for j in range(n_annuli):
        rng = philox_stream(cfg.seed, j + 1, batch)
        counts = rng.poisson(ANNULUS_POINTS, size)
        u = ANNULUS_POINTS * (j + rng.random(int(counts.sum())))
        owner = np.repeat(np.arange(size), counts)
        geometry.append((rng, counts, u, owner))
        open_ = np.isinf(nearest) & (counts > 0)
        if open_.any():
            starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
            nonempty = counts > 0
            seg_min = np.full(size, np.inf)
            seg_min[nonempty] = np.minimum.reduceat(u, starts[nonempty])
            nearest[open_] = seg_min[open_]

    interference = np.zeros(size)
    n_int = np.zeros(size, dtype=np.int64)
    for rng, counts, u, owner in geometry:
        g = interferer(rng, u.size)
        serving = u == nearest[owner]
        g[serving] = 0.0
        interference += np.bincount(owner, weights=g * u**-half_alpha, minlength=size)
        n_int += counts - np.bincount(owner, weights=serving, minlength=size).astype(np.int64)

    g0 = MixtureSampler(model.desired)(philox_stream(cfg.seed, _DESIRED_STREAM, batch), size)
    with np.errstate(divide="ignore"):
        sir = g0 * nearest**-half_alpha / (interference + far / scale)

    bad = np.flatnonzero(n_int == 0)
    for i in bad:
        rng = philox_stream(cfg.seed, _RESAMPLE_STREAM + int(i), batch)
        sir[i] = sir_trial(model, cfg, rng)
    return sir, int(bad.size)


def _batch_counts(args) -> tuple[np.ndarray, int]:
    model, cfg, thresholds, batch, size = args
    sir, resamples = _batch_sir(model, cfg, batch, size)
    return (sir[:, None] > thresholds[None, :]).sum(axis=0), resamples


def estimate_coverage(
    model: NetworkModel, thresholds: Sequence[float], cfg: SimConfig
) -> list[SimEstimate]:
    """Empirical ``P(SIR > T)`` for every threshold from one shared set of trials."""
    ts = np.asarray(thresholds, dtype=float)
    if ts.size == 0:
        raise DomainError("thresholds must be non-empty")
    if np.any(ts <= 0):
        raise DomainError("thresholds must be > 0")
    n_batches = math.ceil(cfg.trials / BATCH_SIZE)
    jobs = [
        (model, cfg, ts, b, min(BATCH_SIZE, cfg.trials - b * BATCH_SIZE)) for b in range(n_batches)
    ]
    if cfg.workers > 1 and n_batches > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_batch_counts, jobs))
    else:
        results = [_batch_counts(job) for job in jobs]
    hits = np.sum([r[0] for r in results], axis=0)
    resamples = sum(r[1] for r in results)

    out = []
    for t, k in zip(ts, hits):
        lo, hi = wilson_interval(int(k), cfg.trials, cfg.ci_level)
        out.append(SimEstimate(float(t), int(k) / cfg.trials, lo, hi, cfg.trials, cfg.seed, resamples))
    return out
