"""kappa-mu shadowed fading: parameters, Gamma-mixture form, densities, samplers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator

from . import specfun
from .errors import DomainError, TruncationError

INFINITE = math.inf
"""Sentinel for ``m -> infinity`` (no shadowing of the dominant component)."""

DEFAULT_EPS = 1e-10
DEFAULT_MAX_TERMS = 10_000


@dataclass(frozen=True)
class FadingParams:
    """One link's fading law.

    ``m`` may be :data:`INFINITE`.  ``mean_power`` is the average channel
    power; the Gamma rate of the mixture components is :attr:`rate`.
    """

    kappa: float
    mu: float
    m: float = INFINITE
    mean_power: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa >= 0):
            raise DomainError(f"kappa must be finite and >= 0, got {self.kappa!r}")
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise DomainError(f"mu must be finite and > 0, got {self.mu!r}")
        if not (self.m > 0):
            raise DomainError(f"m must be > 0 or INFINITE, got {self.m!r}")
        if not (math.isfinite(self.mean_power) and self.mean_power > 0):
            raise DomainError(f"mean_power must be finite and > 0, got {self.mean_power!r}")

    @property
    def rate(self) -> float:
        return self.mu * (1.0 + self.kappa) / self.mean_power

    @property
    def shadowed(self) -> bool:
        return math.isfinite(self.m)


@dataclass(frozen=True)
class GammaMixture:
    """Truncated mixture ``sum_l w_l Gamma(base_shape + l, scale=1/rate)``."""

    rate: float
    base_shape: float
    weights: np.ndarray
    residual: float

    @property
    def n_terms(self) -> int:
        return self.weights.size

    @property
    def shapes(self) -> np.ndarray:
        return self.base_shape + np.arange(self.weights.size)

    def normalized_weights(self) -> np.ndarray:
        """Weights with the residual mass folded into the last component."""
        w = self.weights.copy()
        w[-1] += self.residual
        return w


def _log_weight_step(p: FadingParams):
    """Return ``(log w_0, f)`` with ``f(l) = log(w_{l+1} / w_l)``."""
    mk = p.mu * p.kappa
    if not p.shadowed:
        return -mk, lambda l: math.log(mk) - math.log(l + 1)
    # the Gamma(l+mu)/(mu)_l factors cancel, leaving a negative binomial law
    log_rho = math.log(mk) - math.log(mk + p.m)
    log_w0 = p.m * (math.log(p.m) - math.log(mk + p.m))
    return log_w0, lambda l: math.log(p.m + l) - math.log(l + 1) + log_rho


def _ratio_bound(p: FadingParams, l: int) -> float:
    """Upper bound on ``w_{j+1}/w_j`` for every ``j >= l``."""
    mk = p.mu * p.kappa
    if not p.shadowed:
        return mk / (l + 1)
    rho = mk / (mk + p.m)
    if p.m <= 1:
        return rho
    return rho * (p.m + l) / (l + 1)


def _tail_after(p: FadingParams, n: int, log_wn: float, step) -> float:
    """``sum_{l > n} w_l`` by direct forward summation from ``w_n``."""
    terms = []
    log_w = log_wn
    l = n
    while True:
        log_w += step(l)
        l += 1
        w = math.exp(log_w)
        terms.append(w)
        r = _ratio_bound(p, l)
        if r < 1 and w * r / (1 - r) <= 1e-17 * max(math.fsum(terms), 1e-300):
            break
        if w == 0.0 and r < 1:
            break
        if l - n > 10 * DEFAULT_MAX_TERMS:
            raise TruncationError("tail summation did not settle")
    return math.fsum(terms)


def mixture_weights(
    p: FadingParams, eps: float = DEFAULT_EPS, max_terms: int = DEFAULT_MAX_TERMS
) -> GammaMixture:
    """Truncated Gamma-mixture representation of the fading power.

    Weights are built from the ratio ``w_{l+1}/w_l`` in the log domain and
    truncated at the smallest ``N`` whose residual mass is below ``eps``.
    """
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    if p.kappa == 0:
        return GammaMixture(p.rate, p.mu, np.array([1.0]), 0.0)
    log_w, step = _log_weight_step(p)
    weights = [math.exp(log_w)]
    l = 0
    while True:
        if 1.0 - math.fsum(weights) < eps and _ratio_bound(p, l) < 1:
            residual = _tail_after(p, l, log_w, step)
            if residual < eps:
                break
        if len(weights) >= max_terms:
            raise TruncationError(
                f"mixture needs more than {max_terms} weights to reach residual {eps:g}"
            )
        log_w += step(l)
        l += 1
        weights.append(math.exp(log_w))
    return GammaMixture(p.rate, p.mu, np.array(weights), residual)


def tail_mass(p: FadingParams, n: int) -> float:
    """Exact residual ``1 - sum_{l<=n} w_l``, summed directly over the tail."""
    if n < 0:
        raise DomainError("n must be a natural number")
    if p.kappa == 0:
        return 0.0
    log_w, step = _log_weight_step(p)
    for l in range(n):
        log_w += step(l)
    return _tail_after(p, n, log_w, step)


def _gamma_logpdf(shape: np.ndarray, rate: float, x: float) -> np.ndarray:
    shape = np.asarray(shape, dtype=float)
    lg = np.array([math.lgamma(s) for s in shape.ravel()]).reshape(shape.shape)
    return shape * math.log(rate) + (shape - 1) * math.log(x) - rate * x - lg


def mixture_pdf(mix: GammaMixture, gamma: float) -> float:
    """Density of the truncated mixture (residual mass folded into the last term)."""
    if not gamma > 0:
        raise DomainError("gamma must be > 0")
    logs = _gamma_logpdf(mix.shapes, mix.rate, gamma)
    return float(math.fsum(mix.normalized_weights() * np.exp(logs)))


def pdf(p: FadingParams, gamma: float) -> float:
    """Closed-form density of the channel power at ``gamma``.

    Shadowed laws use the ``1F1`` expression in the log domain; for
    ``m = INFINITE`` the Gamma-mixture sum is used instead.
    """
    if not gamma > 0:
        raise DomainError("gamma must be > 0")
    if not p.shadowed:
        return mixture_pdf(mixture_weights(p), gamma)
    mu, m, k, gbar = p.mu, p.m, p.kappa, p.mean_power
    log_pref = (
        mu * math.log(mu)
        + m * math.log(m)
        + mu * math.log1p(k)
        + (mu - 1) * math.log(gamma)
        - math.lgamma(mu)
        - mu * math.log(gbar)
        - m * math.log(mu * k + m)
        - p.rate * gamma
    )
    z = mu * mu * k * (1 + k) / (mu * k + m) * gamma / gbar
    return math.exp(log_pref + specfun.log_hyp1f1(m, mu, z))


def ccdf(p: FadingParams, y: float, eps: float = DEFAULT_EPS) -> float:
    """``P(gamma > y)`` as the weighted sum of regularized upper incomplete gammas."""
    if not y >= 0:
        raise DomainError("y must be >= 0")
    mix = mixture_weights(p, eps)
    cy = mix.rate * y
    vals = [w * specfun.reg_upper_gamma(s, cy) for w, s in zip(mix.weights, mix.shapes)]
    return min(1.0, math.fsum(vals))


def second_moment(mix: GammaMixture) -> float:
    s = mix.shapes
    return float(np.dot(mix.normalized_weights(), s * (s + 1))) / mix.rate**2


_SPECIAL_CASES = {
    "rayleigh": 0,
    "nakagami": 1,
    "rician": 1,
    "rician_shadowed": 2,
    "kappa_mu": 2,
    "kappa_mu_shadowed": 3,
}


def special_case(kind: str, *args: float, mean_power: float = 1.0) -> FadingParams:
    """Map a named fading law onto ``(kappa, mu, m)``.

    ``kind`` is one of ``rayleigh``, ``nakagami(m_hat)``, ``rician(K)``,
    ``rician_shadowed(K, m)``, ``kappa_mu(kappa, mu)`` and
    ``kappa_mu_shadowed(kappa, mu, m)``.  Vanishing ``kappa`` is realized as
    exactly 0 and unbounded ``m`` as :data:`INFINITE`.
    """
    kind = kind.lower()
    if kind not in _SPECIAL_CASES:
        raise DomainError(f"unknown fading kind {kind!r}")
    if len(args) != _SPECIAL_CASES[kind]:
        raise DomainError(f"{kind} takes {_SPECIAL_CASES[kind]} parameter(s), got {len(args)}")
    if kind == "rayleigh":
        return FadingParams(0.0, 1.0, INFINITE, mean_power)
    if kind == "nakagami":
        (m_hat,) = args
        if not m_hat > 0:
            raise DomainError("Nakagami m_hat must be > 0")
        return FadingParams(0.0, float(m_hat), INFINITE, mean_power)
    if kind == "rician":
        (k,) = args
        if not k >= 0:
            raise DomainError("Rician K must be >= 0")
        return FadingParams(float(k), 1.0, INFINITE, mean_power)
    if kind == "rician_shadowed":
        k, m = args
        if not k >= 0:
            raise DomainError("Rician K must be >= 0")
        return FadingParams(float(k), 1.0, float(m), mean_power)
    if kind == "kappa_mu":
        k, mu = args
        return FadingParams(float(k), float(mu), INFINITE, mean_power)
    k, mu, m = args
    return FadingParams(float(k), float(mu), float(m), mean_power)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

class MixtureSampler:
    """Vectorized draws of channel power from the truncated Gamma mixture.

    The mixture index comes from inverse-CDF over the weights, with the
    residual mass assigned to the last component.
    """

    def __init__(self, p: FadingParams, eps: float = DEFAULT_EPS):
        self.params = p
        self.mixture = mixture_weights(p, eps)
        cdf = np.cumsum(self.mixture.normalized_weights())
        cdf[-1] = 1.0
        self._cdf = cdf
        self._scale = 1.0 / self.mixture.rate

    def __call__(self, rng: Generator, size=None) -> np.ndarray:
        if self.mixture.n_terms == 1:
            shape = self.mixture.base_shape
            if shape == 1.0:
                return rng.standard_exponential(size) * self._scale
            return rng.standard_gamma(shape, size) * self._scale
        idx = np.searchsorted(self._cdf, rng.random(size), side="right")
        idx = np.minimum(idx, self._cdf.size - 1)
        return rng.standard_gamma(self.mixture.base_shape + idx) * self._scale


def sample_power(p: FadingParams, rng: Generator, size=None):
    """Draw channel power(s) through the Gamma-mixture representation."""
    out = MixtureSampler(p)(rng, size)
    return float(out) if size is None else out


def sample_power_physical(p: FadingParams, rng: Generator, size=None):
    """Draw channel power from the physical cluster model (integer ``mu`` only).

    ``mu`` clusters each carry an in-phase and quadrature Gaussian; the
    dominant components, split equally across clusters, are scaled by a
    common unit-mean Gamma(m) shadowing power.
    """
    if not float(p.mu).is_integer():
        raise DomainError("physical sampler requires an integer mu")
    n_clusters = int(p.mu)
    shape = () if size is None else np.atleast_1d(size).tolist()
    sigma2 = p.mean_power / (2.0 * p.mu * (1.0 + p.kappa))
    d2 = p.kappa * p.mean_power / (1.0 + p.kappa)
    if p.shadowed:
        xi2 = rng.gamma(p.m, 1.0 / p.m, size=shape)
    else:
        xi2 = np.ones(shape)
    amp = np.sqrt(xi2 * d2 / n_clusters)
    gauss = rng.standard_normal((*shape, n_clusters, 2)) * math.sqrt(sigma2)
    gauss[..., 0] += amp[..., None]
    out = np.sum(gauss**2, axis=(-2, -1))
    return float(out) if size is None else out
