"""Analytic downlink coverage probability under kappa-mu shadowed fading.

The interference enters through

    G(s) = sum_q v_q 2F1(q + mu_i, -d; 1 - d; -s T c0 / c_i),    d = 2/alpha,

and coverage is a weighted sum of alternating Taylor coefficients of
``1/G`` about ``s = 1``.  Integer desired-link ``mu`` gives the exact
expression; any ``mu >= 1`` can use the Rician (Erlang-mixture)
approximation, where each desired Gamma component is replaced by a
moment-matched Rician power law with its own rate ``c_l``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import specfun
from .errors import DomainError, MethodError, TruncationError
from .fading import DEFAULT_EPS, FadingParams, GammaMixture, mixture_weights, special_case, tail_mass
from .specfun import PowerSeries

DEFAULT_MAX_ORDER = 256
INTEGER_TOL = 1e-9


class Method(str, Enum):
    EXACT_INTEGER_MU = "exact"
    RICIAN_APPROX = "approx"
    AUTO = "auto"


@dataclass(frozen=True)
class NetworkModel:
    density: float
    alpha: float
    desired: FadingParams
    interferer: FadingParams

    def __post_init__(self):
        if not (math.isfinite(self.density) and self.density > 0):
            raise DomainError(f"density must be > 0, got {self.density!r}")
        if not (math.isfinite(self.alpha) and self.alpha > 2):
            raise DomainError(f"path-loss exponent must exceed 2, got {self.alpha!r}")

    @property
    def delta(self) -> float:
        return 2.0 / self.alpha

    def with_density(self, density: float) -> "NetworkModel":
        return NetworkModel(density, self.alpha, self.desired, self.interferer)


@dataclass(frozen=True)
class CoverageQuery:
    threshold: float
    method: Method = Method.AUTO
    eps_weights: float = DEFAULT_EPS
    max_series_order: int = DEFAULT_MAX_ORDER

    def __post_init__(self):
        if not (math.isfinite(self.threshold) and self.threshold > 0):
            raise DomainError(f"threshold must be > 0, got {self.threshold!r}")
        if not 0 < self.eps_weights < 1:
            raise DomainError("eps_weights must lie in (0, 1)")
        if self.max_series_order < 0:
            raise DomainError("max_series_order must be natural")
        object.__setattr__(self, "method", Method(self.method))


@dataclass(frozen=True)
class RicianApproxTerms:
    """Per-component Rician replacements: ``K_l``, ``Omega_l``, ``c_l`` and Poisson weights."""

    mu0: float
    c0: float
    K: np.ndarray
    Omega: np.ndarray
    c: np.ndarray
    omega_pl: list = field(repr=False)
    residuals: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class CoverageResult:
    value: float
    method: Method
    l_terms: int
    q_terms: int
    max_derivative_order: int
    residual_estimate: float


def is_integer_mu(mu: float) -> bool:
    return abs(mu - round(mu)) < INTEGER_TOL


def _rate_ratio(model: NetworkModel, T: float, desired_rate: float | None) -> float:
    c0 = model.desired.rate if desired_rate is None else desired_rate
    return T * c0 / model.interferer.rate


def _interferer_mixture(model: NetworkModel, v: GammaMixture | None, eps: float) -> GammaMixture:
    return mixture_weights(model.interferer, eps) if v is None else v


def g_function(
    s: float,
    T: float,
    model: NetworkModel,
    v: GammaMixture | None = None,
    desired_rate: float | None = None,
) -> float:
    """Evaluate ``G(s)`` with one ``2F1`` call per interferer mixture component."""
    if not s > 0 or not T > 0:
        raise DomainError("g_function needs s > 0 and T > 0")
    v = _interferer_mixture(model, v, DEFAULT_EPS)
    d = model.delta
    z = -s * _rate_ratio(model, T, desired_rate)
    vals = [
        wq * specfun.hyp2f1(a, -d, 1.0 - d, z)
        for wq, a in zip(v.normalized_weights(), v.shapes)
    ]
    return math.fsum(vals)


def g_taylor(
    T: float,
    model: NetworkModel,
    v: GammaMixture | None = None,
    order: int = 8,
    desired_rate: float | None = None,
) -> PowerSeries:
    """Taylor coefficients ``G^(k)(1)/k!`` for ``k = 0..order``.

    Differentiating ``2F1(a, -d; 1-d; -s x)`` k times produces
    ``(a)_k (-d)_k / (1-d)_k (-x)^k 2F1(a+k, k-d; k+1-d; -x)``.  Because the
    lower parameter is the upper one plus one, each shifted ``2F1`` is an
    incomplete beta at ``y = x/(1+x)``, and all orders share one ladder of
    scaled incomplete betas, which keeps the coefficients well scaled.
    """
    if not T > 0:
        raise DomainError("threshold must be > 0")
    v = _interferer_mixture(model, v, DEFAULT_EPS)
    d = model.delta
    x = _rate_ratio(model, T, desired_rate)
    y = x / (1.0 + x)
    log_y = math.log(y)
    log1p_x = math.log1p(x)
    k = np.arange(order + 1, dtype=float)
    lgk1 = np.array([math.lgamma(kk + 1.0) for kk in k])
    with np.errstate(divide="ignore"):
        log_dfac = np.where(k > 0, np.log(d) - np.log(np.abs(k - d)), 0.0)
    sign = np.where(k > 0, np.where(k % 2 == 1, 1.0, -1.0), 1.0)

    coeffs = np.zeros(order + 1)
    for wq, a in zip(v.normalized_weights(), v.shapes):
        ladder = specfun.beta_ladder(y, 1.0 - d, a + d, order + 1)
        bracket = math.exp(-a * log1p_x) + (a + k) * y * math.exp(d * log1p_x) * ladder
        log_poch = np.array([math.lgamma(a + kk) for kk in k]) - math.lgamma(a) - lgk1
        log_pref = log_dfac + log_poch + k * log_y
        coeffs += wq * sign * np.exp(log_pref) * bracket
    return PowerSeries(coeffs, 1.0)


def g_taylor_pochhammer(
    T: float,
    model: NetworkModel,
    v: GammaMixture | None = None,
    order: int = 8,
    desired_rate: float | None = None,
) -> PowerSeries:
    """Same coefficients as :func:`g_taylor`, term by term from the Pochhammer form.

    One generic ``2F1`` evaluation per (component, order); used to cross-check
    the ladder route.
    """
    v = _interferer_mixture(model, v, DEFAULT_EPS)
    d = model.delta
    x = _rate_ratio(model, T, desired_rate)
    coeffs = []
    for kk in range(order + 1):
        total = 0.0
        for wq, a in zip(v.normalized_weights(), v.shapes):
            fac = specfun.pochhammer(a, kk) * specfun.pochhammer(-d, kk) / specfun.pochhammer(1 - d, kk)
            total += wq * fac * (-x) ** kk * specfun.hyp2f1(a + kk, kk - d, kk + 1 - d, -x)
        coeffs.append(total / math.factorial(kk))
    return PowerSeries(np.array(coeffs), 1.0)


def _alternating_partial_sums(series: PowerSeries) -> np.ndarray:
    """``S_N = sum_{n<=N} (-1)^n c_n``; every summand is a probability mass >= 0."""
    c = series.coeffs
    signs = np.where(np.arange(c.size) % 2 == 0, 1.0, -1.0)
    terms = np.maximum(signs * c, 0.0)
    return np.cumsum(terms)


def _truncate_desired(
    p: FadingParams, w: GammaMixture, n_shift: int, cap: int, eps: float
) -> tuple[np.ndarray, float]:
    """Weights (residual folded into the last) with ``l + n_shift <= cap``."""
    weights = w.weights
    residual = w.residual
    max_l = cap - n_shift
    if weights.size - 1 > max_l:
        if max_l < 0:
            raise TruncationError("max_series_order is below the desired-link shape")
        residual = tail_mass(p, max_l)
        if residual > eps:
            raise TruncationError(
                f"derivative order cap {cap} leaves weight residual {residual:.3g} > {eps:g}"
            )
        weights = weights[: max_l + 1]
    out = weights.copy()
    out[-1] += residual
    return out, residual


def coverage_exact(model: NetworkModel, query: CoverageQuery) -> CoverageResult:
    """Exact coverage for an integer desired-link ``mu``.

    ``P_c = sum_l w_l sum_{n < l + mu0} (-1)^n [s^n] 1/G(s)`` about ``s = 1``;
    one reciprocal series serves every ``l``.
    """
    mu0 = model.desired.mu
    if not is_integer_mu(mu0):
        raise MethodError(f"desired mu={mu0} is not an integer; use coverage_approx")
    n0 = int(round(mu0))
    eps = query.eps_weights
    w_mix = mixture_weights(model.desired, eps)
    v_mix = mixture_weights(model.interferer, eps)
    w, w_res = _truncate_desired(model.desired, w_mix, n0 - 1, query.max_series_order, eps)
    order = w.size - 1 + n0 - 1
    g = g_taylor(query.threshold, model, v_mix, order)
    sums = _alternating_partial_sums(specfun.series_reciprocal(g))
    value = math.fsum(w * sums[np.arange(w.size) + n0 - 1])
    return CoverageResult(
        value=min(1.0, max(0.0, value)),
        method=Method.EXACT_INTEGER_MU,
        l_terms=int(w.size),
        q_terms=v_mix.n_terms,
        max_derivative_order=order,
        residual_estimate=w_res + v_mix.residual,
    )


def rician_terms(mu0: float, c0: float, l_max: int, eps: float = DEFAULT_EPS) -> RicianApproxTerms:
    """Rician replacement of each Gamma(l + mu0, 1/c0) component, ``l = 0..l_max``.

    ``K_l`` solves ``(K+1)^2 / (2K+1) = l + mu0``; the Rician power has mean
    ``Omega_l = (l + mu0)/c0`` and rate ``c_l = (1 + K_l)/Omega_l``, and its
    Erlang weights are Poisson(``K_l``) masses truncated at residual ``eps``.
    """
    if not mu0 >= 1:
        raise DomainError(f"Rician approximation needs mu0 >= 1, got {mu0}")
    if not c0 > 0:
        raise DomainError("c0 must be > 0")
    t = mu0 + np.arange(l_max + 1, dtype=float)
    K = t - 1.0 + np.sqrt(t * (t - 1.0))
    Omega = t / c0
    c = (1.0 + K) / Omega
    omega, res = [], []
    for Kl, Om in zip(K, Omega):
        mix = mixture_weights(special_case("rician", float(Kl), mean_power=float(Om)), eps)
        omega.append(mix.weights)
        res.append(mix.residual)
    return RicianApproxTerms(float(mu0), float(c0), K, Omega, c, omega, np.array(res))


def coverage_approx(model: NetworkModel, query: CoverageQuery) -> CoverageResult:
    """Approximate coverage via the Rician (Erlang-mixture) replacement; needs ``mu0 >= 1``."""
    mu0 = model.desired.mu
    if not mu0 >= 1:
        raise DomainError(f"Rician approximation needs mu0 >= 1, got {mu0}")
    eps = query.eps_weights
    cap = query.max_series_order
    w_mix = mixture_weights(model.desired, eps)
    v_mix = mixture_weights(model.interferer, eps)
    w = w_mix.normalized_weights()
    terms = rician_terms(mu0, model.desired.rate, w.size - 1, eps)

    parts = []
    dropped = 0.0
    max_order = 0
    for l in range(w.size):
        omega = terms.omega_pl[l].copy()
        omega[-1] += terms.residuals[l]
        if omega.size - 1 > cap:
            dropped += w[l] * math.fsum(omega[cap + 1 :])
            omega = omega[: cap + 1]
        order = omega.size - 1
        max_order = max(max_order, order)
        g = g_taylor(query.threshold, model, v_mix, order, desired_rate=float(terms.c[l]))
        sums = _alternating_partial_sums(specfun.series_reciprocal(g))
        parts.append(w[l] * math.fsum(omega * sums))
    if dropped > eps:
        raise TruncationError(
            f"derivative order cap {cap} drops Erlang mass {dropped:.3g} > {eps:g}"
        )
    value = math.fsum(parts)
    return CoverageResult(
        value=min(1.0, max(0.0, value)),
        method=Method.RICIAN_APPROX,
        l_terms=int(w.size),
        q_terms=v_mix.n_terms,
        max_derivative_order=max_order,
        residual_estimate=w_mix.residual + v_mix.residual + float(terms.residuals.max()) + dropped,
    )


def resolve_method(model: NetworkModel, method: Method | str) -> Method:
    method = Method(method)
    if method is Method.AUTO:
        return Method.EXACT_INTEGER_MU if is_integer_mu(model.desired.mu) else Method.RICIAN_APPROX
    return method


def coverage(model: NetworkModel, query: CoverageQuery) -> CoverageResult:
    """Dispatch on ``query.method``; AUTO picks exact for integer desired ``mu``."""
    if resolve_method(model, query.method) is Method.EXACT_INTEGER_MU:
        return coverage_exact(model, query)
    return coverage_approx(model, query)


def conditional_coverage(
    model: NetworkModel,
    T: float,
    r: float,
    eps: float = DEFAULT_EPS,
    method: Method | str = Method.AUTO,
) -> float:
    """``P(SIR > T | serving distance r)``.

    Uses ``L_Y(s) = exp(-pi lambda r^2 (G(s) - 1))`` and the finite Erlang
    CCDF sums; integrating against the nearest-distance density recovers
    :func:`coverage`.
    """
    if not r > 0:
        raise DomainError("r must be > 0")
    if not T > 0:
        raise DomainError("threshold must be > 0")
    area = math.pi * model.density * r * r
    w_mix = mixture_weights(model.desired, eps)
    v_mix = mixture_weights(model.interferer, eps)
    w = w_mix.normalized_weights()

    def erlang_sums(order: int, desired_rate: float | None) -> np.ndarray:
        g = g_taylor(T, model, v_mix, order, desired_rate)
        shifted = g.coeffs.copy()
        shifted[0] -= 1.0
        lap = specfun.series_exp(PowerSeries(-area * shifted, 1.0))
        return _alternating_partial_sums(lap)

    if resolve_method(model, method) is Method.EXACT_INTEGER_MU:
        n0 = int(round(model.desired.mu))
        sums = erlang_sums(w.size - 1 + n0 - 1, None)
        val = math.fsum(w * sums[np.arange(w.size) + n0 - 1])
    else:
        terms = rician_terms(model.desired.mu, model.desired.rate, w.size - 1, eps)
        parts = []
        for l in range(w.size):
            omega = terms.omega_pl[l].copy()
            omega[-1] += terms.residuals[l]
            sums = erlang_sums(omega.size - 1, float(terms.c[l]))
            parts.append(w[l] * math.fsum(omega * sums))
        val = math.fsum(parts)
    return min(1.0, max(0.0, val))
