"""Special functions and truncated power-series arithmetic.

Everything here works in 64-bit floats.  Gamma-function ratios are formed in
the log domain; hypergeometric series are summed until three consecutive
terms fall below ``1e-16`` of the running sum, with a hard cap of
``SERIES_MAX_TERMS`` terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DomainError

SERIES_MAX_TERMS = 10_000
SERIES_RTOL = 1e-16
_CF_MAX_ITER = 10_000
_CF_EPS = 1e-16
_TINY = 1e-300


def _is_nonpos_int(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def _is_int(x: float, tol: float = 0.0) -> bool:
    return abs(x - round(x)) <= tol


# ---------------------------------------------------------------------------
# Gamma family
# ---------------------------------------------------------------------------

def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"log_gamma requires a finite positive argument, got {x!r}")
    return math.lgamma(x)


def pochhammer(a: float, k: int) -> float:
    """Rising factorial ``(a)_k = a (a+1) ... (a+k-1)``; ``(a)_0 = 1``."""
    if k < 0:
        raise DomainError("pochhammer order must be a natural number")
    out = 1.0
    for j in range(k):
        out *= a + j
    return out


def log_pochhammer(a: float, k: int) -> float:
    """``log (a)_k`` for ``a > 0`` via log-gamma differences."""
    if a <= 0:
        raise DomainError("log_pochhammer requires a > 0")
    return math.lgamma(a + k) - math.lgamma(a)


def _gamma_sign(x: float) -> float:
    if x > 0:
        return 1.0
    return -1.0 if math.floor(-x) % 2 == 0 else 1.0


def _gamma_ratio(num: Sequence[float], den: Sequence[float]) -> float:
    """prod Gamma(num) / prod Gamma(den); zero if a denominator sits on a pole."""
    if any(_is_nonpos_int(d) for d in den):
        return 0.0
    if any(_is_nonpos_int(n) for n in num):
        raise DomainError("gamma ratio has a pole in the numerator")
    log_mag = sum(math.lgamma(n) for n in num) - sum(math.lgamma(d) for d in den)
    sign = 1.0
    for v in (*num, *den):
        sign *= _gamma_sign(v)
    return sign * math.exp(log_mag)


def reg_upper_gamma(q: float, y: float) -> float:
    """Regularized upper incomplete gamma ``Gamma(q, y) / Gamma(q)``.

    For integer ``q`` this is the finite Poisson sum
    ``sum_{n<q} e^{-y} y^n / n!``, evaluated term by term in the log domain.
    Other shapes use the classical series / continued-fraction split.
    """
    if not (math.isfinite(q) and q > 0):
        raise DomainError(f"reg_upper_gamma requires q > 0, got {q!r}")
    if not (y >= 0 and not math.isnan(y)):
        raise DomainError(f"reg_upper_gamma requires y >= 0, got {y!r}")
    if y == 0:
        return 1.0
    if math.isinf(y):
        return 0.0
    if _is_int(q) and q <= 1000:
        return _poisson_cdf(int(q) - 1, y)
    if y < q + 1.0:
        return max(0.0, 1.0 - _lower_gamma_series(q, y))
    return _upper_gamma_cf(q, y)


def _poisson_cdf(n_max: int, y: float) -> float:
    log_y = math.log(y)
    terms = [math.exp(-y + n * log_y - math.lgamma(n + 1)) for n in range(n_max + 1)]
    return min(1.0, math.fsum(terms))


def _lower_gamma_series(q: float, y: float) -> float:
    term = 1.0 / q
    total = term
    ap = q
    for _ in range(SERIES_MAX_TERMS):
        ap += 1.0
        term *= y / ap
        total += term
        if abs(term) < abs(total) * SERIES_RTOL:
            return total * math.exp(-y + q * math.log(y) - math.lgamma(q))
    raise ConvergenceError("lower incomplete gamma series did not converge")


def _upper_gamma_cf(q: float, y: float) -> float:
    # modified Lentz on the Legendre continued fraction
    b = y + 1.0 - q
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAX_ITER):
        an = -i * (i - q)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return math.exp(-y + q * math.log(y) - math.lgamma(q)) * h
    raise ConvergenceError("upper incomplete gamma continued fraction did not converge")


# ---------------------------------------------------------------------------
# Incomplete beta
# ---------------------------------------------------------------------------

def _beta_cf(p: float, q: float, y: float) -> float:
    qab = p + q
    qap = p + 1.0
    qam = p - 1.0
    c = 1.0
    d = 1.0 - qab * y / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER):
        m2 = 2 * m
        aa = m * (q - m) * y / ((qam + m2) * (p + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(p + m) * (qab + m) * y / ((p + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ConvergenceError("incomplete beta continued fraction did not converge")


def log_inc_beta(p: float, q: float, y: float) -> float:
    """Log of the unnormalized incomplete beta ``int_0^y t^(p-1) (1-t)^(q-1) dt``."""
    if p <= 0 or q <= 0:
        raise DomainError("incomplete beta requires p, q > 0")
    if not 0.0 <= y <= 1.0:
        raise DomainError("incomplete beta requires 0 <= y <= 1")
    if y == 0.0:
        return -math.inf
    log_beta = math.lgamma(p) + math.lgamma(q) - math.lgamma(p + q)
    if y == 1.0:
        return log_beta
    if y < (p + 1.0) / (p + q + 2.0):
        return p * math.log(y) + q * math.log1p(-y) + math.log(_beta_cf(p, q, y) / p)
    # complement: B(p, q) - B_{1-y}(q, p)
    log_comp = q * math.log1p(-y) + p * math.log(y) + math.log(_beta_cf(q, p, 1.0 - y) / q)
    frac = math.exp(log_comp - log_beta)
    return log_beta + math.log1p(-frac)


def inc_beta(p: float, q: float, y: float, regularized: bool = False) -> float:
    """Incomplete beta integral; ``regularized`` divides by ``B(p, q)``."""
    val = log_inc_beta(p, q, y)
    if regularized:
        val -= math.lgamma(p) + math.lgamma(q) - math.lgamma(p + q)
    return math.exp(val)


def beta_ladder(y: float, p0: float, q: float, count: int) -> np.ndarray:
    """Scaled incomplete betas ``B_y(p0 + k, q) / y^(p0 + k)`` for ``k < count``.

    The top entry comes from the continued fraction, the rest from the
    downward recurrence, which only ever adds positive quantities.
    """
    if not 0.0 < y < 1.0:
        raise DomainError("beta_ladder requires 0 < y < 1")
    out = np.empty(count)
    p_top = p0 + count - 1
    out[-1] = math.exp(log_inc_beta(p_top, q, y) - p_top * math.log(y))
    base = math.exp(q * math.log1p(-y))
    for k in range(count - 2, -1, -1):
        p = p0 + k
        out[k] = ((p + q) * y * out[k + 1] + base) / p
    return out


# ---------------------------------------------------------------------------
# Hypergeometric functions
# ---------------------------------------------------------------------------

def _sum_series(ratio, first: float = 1.0, what: str = "series") -> float:
    """Sum ``t_0 + t_1 + ...`` with ``t_{n+1} = t_n * ratio(n)``."""
    term = first
    total = first
    small = 0
    for n in range(SERIES_MAX_TERMS):
        term *= ratio(n)
        total += term
        if term == 0.0:
            return total
        if abs(term) < SERIES_RTOL * abs(total):
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
    raise ConvergenceError(f"{what} did not converge within {SERIES_MAX_TERMS} terms")


def _log_positive_series(log_ratio, what: str) -> float:
    """log of ``sum_n t_n`` with ``t_0 = 1`` and all terms positive."""
    logs = [0.0]
    small = 0
    peak = 0.0
    for n in range(SERIES_MAX_TERMS):
        nxt = logs[-1] + log_ratio(n)
        logs.append(nxt)
        peak = max(peak, nxt)
        if nxt < peak + math.log(SERIES_RTOL) and nxt < logs[-2]:
            small += 1
            if small >= 3:
                arr = np.asarray(logs)
                return peak + math.log(math.fsum(np.exp(arr - peak)))
        else:
            small = 0
    raise ConvergenceError(f"{what} did not converge within {SERIES_MAX_TERMS} terms")


def hyp1f1(a: float, b: float, z: float) -> float:
    """Kummer's confluent hypergeometric function ``1F1(a; b; z)``.

    Negative ``z`` goes through Kummer's transformation so the summed series
    has terms of one sign whenever ``b > a``.
    """
    if _is_nonpos_int(b):
        raise DomainError("1F1 undefined for non-positive integer b")
    if z == 0 or a == 0:
        return 1.0
    if z < 0 and not _is_nonpos_int(a):
        return math.exp(z) * hyp1f1(b - a, b, -z)
    return _sum_series(lambda n: (a + n) * z / ((b + n) * (n + 1)), what="1F1 series")


def log_hyp1f1(a: float, b: float, z: float) -> float:
    """``log 1F1(a; b; z)`` for ``a, b > 0`` and ``z >= 0`` (no overflow)."""
    if a <= 0 or b <= 0 or z < 0:
        raise DomainError("log_hyp1f1 requires a > 0, b > 0, z >= 0")
    if z == 0:
        return 0.0
    if z > 300 and z > 10 * (abs(b - a) + 1) * (abs(1 - a) + 1):
        asym = _log_hyp1f1_asymptotic(a, b, z)
        if asym is not None:
            return asym
    log_z = math.log(z)
    return _log_positive_series(
        lambda n: math.log(a + n) + log_z - math.log(b + n) - math.log(n + 1), "1F1 series"
    )


def _log_hyp1f1_asymptotic(a: float, b: float, z: float) -> float | None:
    # 1F1(a;b;z) ~ Gamma(b)/Gamma(a) e^z z^(a-b) sum_n (b-a)_n (1-a)_n / n! z^-n;
    # the companion term is smaller by about e^-z and dropped
    term, total = 1.0, 1.0
    for n in range(200):
        nxt = term * (b - a + n) * (1 - a + n) / ((n + 1) * z)
        if nxt == 0.0:
            break
        if abs(nxt) > abs(term):
            return None  # reached the divergent part before converging
        term = nxt
        total += term
        if abs(term) < SERIES_RTOL * abs(total):
            break
    else:
        return None
    return math.lgamma(b) - math.lgamma(a) + z + (a - b) * math.log(z) + math.log(total)


def _hyp2f1_series(a: float, b: float, c: float, z: float) -> float:
    return _sum_series(lambda n: (a + n) * (b + n) * z / ((c + n) * (n + 1)), what="2F1 series")


def _hyp2f1_pfaff(a: float, b: float, c: float, z: float) -> float:
    w = z / (z - 1.0)
    return (1.0 - z) ** (-a) * _hyp2f1_series(a, c - b, c, w)


def _hyp2f1_beta(a: float, b: float, x: float) -> float:
    # 2F1(a, b; b+1; -x) = (1+x)^-a + a x^-b B_y(b+1, a-b),  y = x / (1+x)
    y = x / (1.0 + x)
    first = -a * math.log1p(x)
    second = math.log(a) - b * math.log(x) + log_inc_beta(b + 1.0, a - b, y)
    hi = max(first, second)
    return math.exp(hi) * (math.exp(first - hi) + math.exp(second - hi))


def _beta_form_ok(a: float, b: float, c: float) -> bool:
    return abs(c - b - 1.0) < 1e-14 and b > -1.0 and b != 0.0 and a > 0 and a - b > 0


def _hyp2f1_inversion(a: float, b: float, c: float, z: float) -> float:
    # connection formula for z -> 1/z; requires b - a not an integer
    mz = -z
    t1 = _gamma_ratio((c, b - a), (b, c - a))
    t2 = _gamma_ratio((c, a - b), (a, c - b))
    s1 = _hyp2f1_series(a, a - c + 1.0, a - b + 1.0, 1.0 / z) if t1 else 0.0
    s2 = _hyp2f1_series(b, b - c + 1.0, b - a + 1.0, 1.0 / z) if t2 else 0.0
    return t1 * mz ** (-a) * s1 + t2 * mz ** (-b) * s2


def hyp2f1(a: float, b: float, c: float, z: float, method: str = "auto") -> float:
    """Gauss hypergeometric function ``2F1(a, b; c; z)`` for real ``z <= 0``.

    ``method`` selects the route: ``"direct"`` sums the defining series
    (``|z| < 1`` only), ``"pfaff"`` sums the series after the Pfaff map
    ``z -> z/(z-1)``, ``"beta"`` uses the incomplete-beta closed form
    available when ``c = b + 1``.  ``"auto"`` prefers the beta form when it
    applies, then the Pfaff series, then the ``1/z`` connection formula.
    Parameter sets with integer ``b - a`` and ``|z|`` in the thousands can
    exhaust the series cap and raise :class:`ConvergenceError`.
    """
    if _is_nonpos_int(c):
        raise DomainError("2F1 undefined for non-positive integer c")
    if not z <= 0:
        raise DomainError(f"hyp2f1 is implemented for z <= 0 only, got {z!r}")
    if z == 0 or a == 0 or b == 0:
        return 1.0
    if method == "direct":
        if z <= -1.0:
            raise DomainError("direct 2F1 series needs |z| < 1")
        return _hyp2f1_series(a, b, c, z)
    if method == "pfaff":
        return _hyp2f1_pfaff(a, b, c, z)
    if method == "beta":
        if _beta_form_ok(a, b, c):
            return _hyp2f1_beta(a, b, -z)
        if _beta_form_ok(b, a, c):
            return _hyp2f1_beta(b, a, -z)
        raise DomainError("beta route needs c = b + 1 with b > -1 and a > max(b, 0)")
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")

    if _is_nonpos_int(a) or _is_nonpos_int(b):
        return _hyp2f1_series(a, b, c, z)  # terminating polynomial
    if _beta_form_ok(a, b, c):
        return _hyp2f1_beta(a, b, -z)
    if _beta_form_ok(b, a, c):
        return _hyp2f1_beta(b, a, -z)
    w = z / (z - 1.0)
    if w <= 0.95:
        try:
            return _hyp2f1_pfaff(a, b, c, z)
        except ConvergenceError:
            pass
    if z < -2.0 and not _is_int(b - a, 1e-12):
        return _hyp2f1_inversion(a, b, c, z)
    return _hyp2f1_pfaff(a, b, c, z)


# ---------------------------------------------------------------------------
# Bell polynomials and power series
# ---------------------------------------------------------------------------

def bell_partial(n: int, k: int, x: Sequence[float]) -> float:
    """Partial exponential Bell polynomial ``B_{n,k}(x_1, ..., x_{n-k+1})``.

    ``x[0]`` holds ``x_1``.  Uses
    ``B_{n,k} = sum_{i=1}^{n-k+1} C(n-1, i-1) x_i B_{n-i,k-1}``.
    """
    if n < 0 or k < 0:
        raise IndexError("Bell polynomial indices must be natural numbers")
    if n > 0 and not 1 <= k <= n:
        raise IndexError(f"Bell polynomial needs 1 <= k <= n, got n={n}, k={k}")
    need = n - k + 1
    if n > 0 and len(x) < need:
        raise IndexError(f"B_{{{n},{k}}} needs {need} arguments, got {len(x)}")
    xs = tuple(float(v) for v in x[: max(need, 0)])

    @lru_cache(maxsize=None)
    def table(nn: int, kk: int) -> float:
        if nn == 0 and kk == 0:
            return 1.0
        if nn == 0 or kk == 0:
            return 0.0
        return math.fsum(
            math.comb(nn - 1, i - 1) * xs[i - 1] * table(nn - i, kk - 1)
            for i in range(1, nn - kk + 2)
        )

    return table(n, k)


def reciprocal_derivatives_faa_di_bruno(derivs: Sequence[float], n: int) -> float:
    """n-th derivative of ``1/g`` from ``g, g', g'', ...`` via Faa di Bruno.

    ``derivs[j]`` is the j-th derivative of g at the point.  Slow and prone to
    overflow for large ``n``; kept as an independent check on
    :func:`series_reciprocal`.
    """
    g0 = derivs[0]
    if n == 0:
        return 1.0 / g0
    tail = list(derivs[1:])
    return math.fsum(
        (-1) ** k * math.factorial(k) * g0 ** (-k - 1) * bell_partial(n, k, tail)
        for k in range(1, n + 1)
    )


@dataclass(frozen=True)
class PowerSeries:
    """Truncated Taylor series ``sum_k coeffs[k] (s - center)^k``."""

    coeffs: np.ndarray
    center: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("coeffs must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("power series coefficients must be finite")
        object.__setattr__(self, "coeffs", arr)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def derivative(self, n: int) -> float:
        """n-th derivative at the expansion point."""
        return math.factorial(n) * float(self.coeffs[n])

    def __call__(self, s: float) -> float:
        return float(np.polynomial.polynomial.polyval(s - self.center, self.coeffs))


def series_mul(f: PowerSeries, g: PowerSeries) -> PowerSeries:
    """Product truncated to the smaller order."""
    order = min(f.order, g.order)
    out = np.convolve(f.coeffs[: order + 1], g.coeffs[: order + 1])[: order + 1]
    return PowerSeries(out, f.center)


def series_reciprocal(g: PowerSeries) -> PowerSeries:
    """Taylor coefficients of ``1/g`` to the same order as ``g``."""
    a = g.coeffs
    if a[0] == 0:
        raise ZeroDivisionError("series reciprocal needs a non-zero constant term")
    h = np.zeros_like(a)
    h[0] = 1.0 / a[0]
    for n in range(1, a.size):
        h[n] = -np.dot(a[1 : n + 1], h[n - 1 :: -1]) / a[0]
    return PowerSeries(h, g.center)


def series_exp(f: PowerSeries) -> PowerSeries:
    """Taylor coefficients of ``exp(f)``."""
    a = f.coeffs
    e = np.zeros_like(a)
    e[0] = math.exp(a[0])
    k = np.arange(a.size, dtype=float)
    for n in range(1, a.size):
        e[n] = np.dot(k[1 : n + 1] * a[1 : n + 1], e[n - 1 :: -1]) / n
    return PowerSeries(e, f.center)
