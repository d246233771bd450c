"""Fast invariant checks run by ``kmucov selftest``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import specfun
from .coverage import CoverageQuery, Method, NetworkModel, coverage, g_function, g_taylor
from .fading import INFINITE, FadingParams, mixture_weights, special_case, tail_mass


@dataclass
class Check:
    name: str
    error: Callable[[], float]
    tolerance: float


def _rayleigh_pc(T: float) -> float:
    rt = math.sqrt(T)
    return 1.0 / (1.0 + rt * (math.pi / 2 - math.atan(1.0 / rt)))


def _reg_gamma_finite_sum() -> float:
    worst = 0.0
    for q in range(1, 21):
        for y in np.linspace(0.0, 50.0, 26):
            ref = math.fsum(math.exp(-y) * y**n / math.factorial(n) for n in range(q))
            worst = max(worst, abs(specfun.reg_upper_gamma(q, y) - ref))
    return worst


def _reciprocal_convolution() -> float:
    rng = np.random.default_rng(7)
    g = specfun.PowerSeries(np.concatenate(([3.0], rng.uniform(-1, 1, 8))))
    h = specfun.series_reciprocal(g)
    prod = specfun.series_mul(g, h).coeffs
    target = np.zeros_like(prod)
    target[0] = 1.0
    return float(np.max(np.abs(prod - target)))


def _reciprocal_vs_bell() -> float:
    rng = np.random.default_rng(11)
    coeffs = np.concatenate(([2.0], rng.uniform(-1, 1, 8)))
    derivs = [math.factorial(k) * c for k, c in enumerate(coeffs)]
    h = specfun.series_reciprocal(specfun.PowerSeries(coeffs))
    worst = 0.0
    for n in range(9):
        ref = specfun.reciprocal_derivatives_faa_di_bruno(derivs, n)
        worst = max(worst, abs(h.derivative(n) - ref) / abs(ref))
    return worst


def _rayleigh_model(density: float = 1.0) -> NetworkModel:
    r = special_case("rayleigh")
    return NetworkModel(density, 4.0, r, r)


def _rayleigh_coverage() -> float:
    m = _rayleigh_model()
    return max(abs(coverage(m, CoverageQuery(T)).value - _rayleigh_pc(T)) for T in (0.1, 1.0, 10.0))


def _taylor_vs_fd() -> float:
    p = FadingParams(2.0, 2.0, 3.0)
    m = NetworkModel(1.0, 4.0, p, p)
    h = 1e-5
    d1 = (g_function(1 + h, 1.0, m) - g_function(1 - h, 1.0, m)) / (2 * h)
    return abs(d1 / g_taylor(1.0, m, order=1).coeffs[1] - 1.0)


def _approx_equals_exact_mu1() -> float:
    # Rayleigh desired link: only l = 0 survives and K_0 = 0
    m = NetworkModel(1.0, 4.0, special_case("rayleigh"), FadingParams(2.0, 2.0, 3.0))
    ex = coverage(m, CoverageQuery(1.0, Method.EXACT_INTEGER_MU)).value
    ap = coverage(m, CoverageQuery(1.0, Method.RICIAN_APPROX)).value
    return abs(ex - ap)


def _density_invariance() -> float:
    p = FadingParams(2.0, 2.0, 3.0)
    vals = [coverage(NetworkModel(lam, 4.0, p, p), CoverageQuery(1.0)).value for lam in (0.1, 1.0, 10.0)]
    return (max(vals) - min(vals)) / vals[1]


def default_checks() -> list[Check]:
    return [
        Check("log_gamma", lambda: max(abs(specfun.log_gamma(5.0) - math.log(24.0)),
                                       abs(specfun.log_gamma(0.5) - 0.5 * math.log(math.pi))), 1e-13),
        Check("pochhammer", lambda: abs(specfun.pochhammer(0.5, 3) - 1.875), 1e-15),
        Check("reg_upper_gamma_finite_sum", _reg_gamma_finite_sum, 1e-13),
        Check("hyp1f1_exponential", lambda: abs(specfun.hyp1f1(1, 1, 1.5) / math.exp(1.5) - 1), 1e-12),
        Check("hyp2f1_rayleigh", lambda: abs(specfun.hyp2f1(1, -0.5, 0.5, -1) - 1 - math.pi / 4), 1e-12),
        Check("hyp2f1_pfaff_vs_beta", lambda: abs(
            specfun.hyp2f1(2.5, -0.5, 0.5, -10, "pfaff") / specfun.hyp2f1(2.5, -0.5, 0.5, -10, "beta") - 1
        ), 1e-11),
        Check("bell_partial", lambda: abs(specfun.bell_partial(3, 2, [1.0, 2.0]) - 6.0), 0.0),
        Check("series_reciprocal_convolution", _reciprocal_convolution, 1e-12),
        Check("series_reciprocal_vs_faa_di_bruno", _reciprocal_vs_bell, 1e-10),
        Check("weights_geometric", lambda: float(np.max(np.abs(
            mixture_weights(FadingParams(1, 1, 1)).weights[:10] - 0.5 ** np.arange(1, 11)
        ))), 1e-15),
        Check("weights_poisson_limit", lambda: float(np.max(np.abs(
            mixture_weights(FadingParams(2, 1, INFINITE)).weights[:8]
            - [math.exp(-2) * 2**l / math.factorial(l) for l in range(8)]
        ))), 1e-15),
        Check("tail_mass_geometric", lambda: abs(tail_mass(FadingParams(1, 1, 1), 9) - 2.0**-10), 1e-12),
        Check("rayleigh_coverage_oracle", _rayleigh_coverage, 1e-8),
        Check("g_taylor_finite_difference", _taylor_vs_fd, 1e-6),
        Check("approx_equals_exact_mu1", _approx_equals_exact_mu1, 1e-9),
        Check("density_invariance", _density_invariance, 1e-12),
    ]


def run_selftest(corrupt: Iterable[str] = (), echo: Callable[[str], None] = print) -> bool:
    """Run every check and report one line each; ``corrupt`` names checks whose
    tolerance is forced negative (harness test hook)."""
    corrupt = set(corrupt)
    checks = default_checks()
    unknown = corrupt - {c.name for c in checks}
    if unknown:
        raise KeyError(f"unknown check(s): {', '.join(sorted(unknown))}")
    ok = True
    for chk in checks:
        tol = -1.0 if chk.name in corrupt else chk.tolerance
        try:
            err = chk.error()
            passed = err <= tol
            detail = f"err={err:.3e} tol={tol:.1e}"
        except Exception as exc:  # a crashing check is a failing check
            passed = False
            detail = f"{type(exc).__name__}: {exc}"
        ok &= passed
        echo(f"{'PASS' if passed else 'FAIL'}  {chk.name:<36} {detail}")
    echo(f"{len(checks)} checks, {'all passed' if ok else 'FAILURES'}")
    return ok
