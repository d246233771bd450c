"""Experiment configuration: a flat, sectioned ``key = value`` text format.

Example::

    [network]
    alpha = 4
    lambda = 1

    [desired]
    kind = kappa_mu_shadowed
    kappa = 2
    mu = 2
    m = 3

    [interferer]
    kind = same

    [sweep]
    t_db_start = -10
    t_db_stop = 10
    t_db_step = 2

    [analysis]
    method = auto

    [sim]
    trials = 100000
    seed = 1

    [output]
    csv = coverage.csv
    svg = coverage.svg

Every error names the offending line.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .coverage import DEFAULT_MAX_ORDER, Method, NetworkModel, is_integer_mu
from .errors import DomainError
from .fading import DEFAULT_EPS, FadingParams, special_case
from .mcsim import SimConfig

_FADING_KEYS = {
    "rayleigh": (),
    "nakagami": ("m_hat",),
    "rician": ("k",),
    "rician_shadowed": ("k", "m"),
    "kappa_mu": ("kappa", "mu"),
    "kappa_mu_shadowed": ("kappa", "mu", "m"),
    "raw": ("kappa", "mu", "m"),
}

_SECTIONS = {
    "network": {"alpha", "lambda"},
    "desired": {"kind", "m_hat", "k", "kappa", "mu", "m", "mean_power"},
    "interferer": {"kind", "m_hat", "k", "kappa", "mu", "m", "mean_power"},
    "sweep": {"t_db_start", "t_db_stop", "t_db_step", "t_db"},
    "analysis": {"method", "eps_weights", "max_series_order", "squared_error"},
    "sim": {"trials", "seed", "min_expected_points", "window_radius", "ci_level", "far_field", "workers"},
    "output": {"csv", "svg", "error_svg"},
}

_METHOD_NAMES = {"exact": Method.EXACT_INTEGER_MU, "approx": Method.RICIAN_APPROX, "auto": Method.AUTO}


class ConfigError(ValueError):
    def __init__(self, message: str, source: str = "<config>", line: int | None = None):
        self.line = line
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


@dataclass
class ExperimentConfig:
    model: NetworkModel
    thresholds_db: list[float]
    method: Method = Method.AUTO
    eps_weights: float = DEFAULT_EPS
    max_series_order: int = DEFAULT_MAX_ORDER
    squared_error: bool = False
    sim: SimConfig | None = None
    csv_path: Path | None = None
    svg_path: Path | None = None
    error_svg_path: Path | None = None
    source: str = field(default="<config>", repr=False)

    @property
    def thresholds(self) -> list[float]:
        return [db_to_linear(t) for t in self.thresholds_db]


def db_to_linear(t_db: float) -> float:
    return 10.0 ** (t_db / 10.0)


def linear_to_db(t: float) -> float:
    return 10.0 * math.log10(t)


class _Section(dict):
    """key -> (value, line number)."""

    def __init__(self, name: str, line: int):
        super().__init__()
        self.name = name
        self.line = line


def _tokenize(text: str, source: str) -> dict[str, _Section]:
    sections: dict[str, _Section] = {}
    current: _Section | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", source, lineno)
            name = line[1:-1].strip().lower()
            if name not in _SECTIONS:
                raise ConfigError(f"unknown section [{name}]", source, lineno)
            if name in sections:
                raise ConfigError(f"duplicate section [{name}]", source, lineno)
            current = sections[name] = _Section(name, lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", source, lineno)
        if current is None:
            raise ConfigError("key outside of any section", source, lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if key not in _SECTIONS[current.name]:
            raise ConfigError(f"unknown key {key!r} in [{current.name}]", source, lineno)
        if key in current:
            raise ConfigError(f"duplicate key {key!r}", source, lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", source, lineno)
        current[key] = (value, lineno)
    return sections


class _Reader:
    def __init__(self, sections: dict[str, _Section], source: str):
        self.sections = sections
        self.source = source

    def has(self, section: str, key: str | None = None) -> bool:
        if section not in self.sections:
            return False
        return key is None or key in self.sections[section]

    def line(self, section: str, key: str | None = None) -> int | None:
        sec = self.sections.get(section)
        if sec is None:
            return None
        if key is not None and key in sec:
            return sec[key][1]
        return sec.line

    def error(self, msg: str, section: str, key: str | None = None) -> ConfigError:
        return ConfigError(msg, self.source, self.line(section, key))

    def raw(self, section: str, key: str, default=None):
        sec = self.sections.get(section)
        if sec is None or key not in sec:
            if default is None:
                raise self.error(f"missing required key {key!r} in [{section}]", section)
            return default
        return sec[key][0]

    def number(self, section: str, key: str, default=None, allow_inf: bool = False) -> float:
        value = self.raw(section, key, default)
        if isinstance(value, (int, float)):
            return float(value)
        if allow_inf and value.lower() in ("inf", "infinite", "infinity"):
            return math.inf
        try:
            out = float(value)
        except ValueError:
            raise self.error(f"{key} must be a number, got {value!r}", section, key) from None
        if not math.isfinite(out):
            raise self.error(f"{key} must be finite", section, key)
        return out

    def integer(self, section: str, key: str, default=None) -> int:
        value = self.raw(section, key, default)
        if isinstance(value, int):
            return value
        try:
            return int(value.replace("_", ""))
        except ValueError:
            raise self.error(f"{key} must be an integer, got {value!r}", section, key) from None

    def boolean(self, section: str, key: str, default: bool) -> bool:
        value = self.raw(section, key, str(default))
        v = value.lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise self.error(f"{key} must be a boolean, got {value!r}", section, key)


def _fading(rd: _Reader, section: str, other: FadingParams | None = None) -> FadingParams:
    if not rd.has(section):
        raise ConfigError(f"missing section [{section}]", rd.source)
    kind = rd.raw(section, "kind").lower()
    if kind == "same":
        if other is None:
            raise rd.error("kind = same is only valid for [interferer]", section, "kind")
        return other
    if kind not in _FADING_KEYS:
        raise rd.error(f"unknown fading kind {kind!r}", section, "kind")
    keys = _FADING_KEYS[kind]
    for key in rd.sections[section]:
        if key not in (*keys, "kind", "mean_power"):
            raise rd.error(f"key {key!r} does not apply to kind {kind!r}", section, key)
    mean_power = rd.number(section, "mean_power", 1.0)
    args = [rd.number(section, key, allow_inf=(key == "m")) for key in keys]
    try:
        if kind == "raw":
            return FadingParams(*args, mean_power=mean_power)
        return special_case(kind, *args, mean_power=mean_power)
    except DomainError as exc:
        raise rd.error(str(exc), section, "kind") from None


def _sweep(rd: _Reader) -> list[float]:
    if not rd.has("sweep"):
        raise ConfigError("missing section [sweep]", rd.source)
    if rd.has("sweep", "t_db"):
        raw = rd.raw("sweep", "t_db")
        try:
            values = [float(v) for v in raw.replace(",", " ").split()]
        except ValueError:
            raise rd.error(f"t_db must be a list of numbers, got {raw!r}", "sweep", "t_db") from None
        if not values:
            raise rd.error("empty sweep", "sweep", "t_db")
        return values
    start = rd.number("sweep", "t_db_start")
    stop = rd.number("sweep", "t_db_stop")
    step = rd.number("sweep", "t_db_step")
    if step <= 0:
        raise rd.error("t_db_step must be > 0", "sweep", "t_db_step")
    if stop < start:
        raise rd.error(f"empty sweep range: t_db_stop {stop} < t_db_start {start}", "sweep", "t_db_stop")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> ExperimentConfig:
    rd = _Reader(_tokenize(text, source), source)
    if not rd.has("network"):
        raise ConfigError("missing section [network]", source)
    alpha = rd.number("network", "alpha")
    density = rd.number("network", "lambda", 1.0)
    desired = _fading(rd, "desired")
    interferer = _fading(rd, "interferer", desired)
    try:
        model = NetworkModel(density, alpha, desired, interferer)
    except DomainError as exc:
        raise rd.error(str(exc), "network") from None

    method_name = rd.raw("analysis", "method", "auto").lower()
    if method_name not in _METHOD_NAMES:
        raise rd.error(f"method must be exact, approx or auto, got {method_name!r}", "analysis", "method")
    eps = rd.number("analysis", "eps_weights", DEFAULT_EPS)
    if not 0 < eps < 1:
        raise rd.error("eps_weights must lie in (0, 1)", "analysis", "eps_weights")
    max_order = rd.integer("analysis", "max_series_order", DEFAULT_MAX_ORDER)
    if max_order < 1:
        raise rd.error("max_series_order must be >= 1", "analysis", "max_series_order")

    sim = None
    if rd.has("sim"):
        kwargs = {
            "trials": rd.integer("sim", "trials", 100_000),
            "seed": rd.integer("sim", "seed", 0),
            "min_expected_points": rd.number("sim", "min_expected_points", 200.0),
            "ci_level": rd.number("sim", "ci_level", 0.99),
            "far_field": rd.raw("sim", "far_field", "mean").lower(),
            "workers": rd.integer("sim", "workers", 1),
        }
        if rd.has("sim", "window_radius"):
            kwargs["window_radius"] = rd.number("sim", "window_radius")
        try:
            sim = SimConfig(**kwargs)
        except DomainError as exc:
            raise rd.error(str(exc), "sim") from None

    def out_path(key: str) -> Path | None:
        if not rd.has("output", key):
            return None
        p = Path(rd.raw("output", key))
        return p if p.is_absolute() or base_dir is None else base_dir / p

    cfg = ExperimentConfig(
        model=model,
        thresholds_db=_sweep(rd),
        method=_METHOD_NAMES[method_name],
        eps_weights=eps,
        max_series_order=max_order,
        squared_error=rd.boolean("analysis", "squared_error", False),
        sim=sim,
        csv_path=out_path("csv"),
        svg_path=out_path("svg"),
        error_svg_path=out_path("error_svg"),
        source=source,
    )
    try:
        validate_method(cfg)
    except ConfigError as exc:
        key = "squared_error" if "squared_error" in str(exc) else "method"
        raise ConfigError(str(exc).split(": ", 1)[-1], source, rd.line("analysis", key)) from None
    return cfg


def validate_method(cfg: ExperimentConfig) -> None:
    mu0 = cfg.model.desired.mu
    if cfg.method is Method.EXACT_INTEGER_MU and not is_integer_mu(mu0):
        raise ConfigError(f"method exact needs an integer desired mu, got {mu0}", cfg.source)
    if cfg.method is Method.RICIAN_APPROX and mu0 < 1:
        raise ConfigError(f"method approx needs desired mu >= 1, got {mu0}", cfg.source)
    if cfg.method is Method.AUTO and not is_integer_mu(mu0) and mu0 < 1:
        raise ConfigError(f"non-integer desired mu below 1 is not supported, got {mu0}", cfg.source)
    if cfg.squared_error and not is_integer_mu(mu0):
        raise ConfigError(f"squared_error needs an integer desired mu, got {mu0}", cfg.source)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, str(path), path.parent)


def apply_overrides(
    cfg: ExperimentConfig,
    *,
    seed: int | None = None,
    trials: int | None = None,
    method: str | None = None,
    out: str | Path | None = None,
    workers: int | None = None,
) -> ExperimentConfig:
    """Command-line flags win over file keys."""
    if method is not None:
        cfg = replace(cfg, method=_METHOD_NAMES[method])
        validate_method(cfg)
    if seed is not None or trials is not None or workers is not None:
        sim = cfg.sim or SimConfig()
        try:
            sim = replace(
                sim,
                seed=sim.seed if seed is None else seed,
                trials=sim.trials if trials is None else trials,
                workers=sim.workers if workers is None else workers,
            )
        except DomainError as exc:
            raise ConfigError(str(exc), "command line") from None
        cfg = replace(cfg, sim=sim)
    if out is not None:
        cfg = replace(cfg, csv_path=None if str(out) == "-" else Path(out))
    return cfg
