"""Flat ``key = value`` experiment configuration.

Lines starting with ``#`` (and anything after a ``#``) are comments; lists are
comma-separated. Unset keys fall back to the reference scenario: N=100, M=20, R=10,
noise variance 0.01, signal energy 3, lambda=2, nu=1.1.
"""
from dataclasses import asdict, dataclass, fields, replace

MU2_SOURCES = ("numeric", "bound")
MODES = ("clustering", "consensus")

DEFAULT_P_GRID = tuple(round(0.01 * i, 2) for i in range(51))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 100
    m: int = 20
    radius: int = 10
    noise_variance: float = 0.01
    energy: float = 3.0
    k: int = 4
    lam: float = 2.0
    unit_cost: float = 1.0
    seed: int = 0
    trials: int = 200
    stat_trials: int = 10_000
    p: tuple = (0.0, 0.05, 0.2, 0.5)
    p_grid: tuple = DEFAULT_P_GRID
    iterations: tuple = (300, 400)
    queried: int | None = None
    nu: float = 1.1
    mu2: str | None = None
    mode: str | None = None
    step_size: float | None = None
    validate_p: float = 0.2
    validate_queried: int = 20

    def __post_init__(self):
        validate(self)

    @property
    def snr(self):
        if self.noise_variance == 0:
            return float("inf")
        return self.energy / (self.n * self.noise_variance)

    @property
    def sigma_n(self):
        return self.noise_variance**0.5


# config-file key -> dataclass field
_KEY_TO_FIELD = {f.name: f.name for f in fields(ExperimentConfig)}
_KEY_TO_FIELD["lambda"] = "lam"
del _KEY_TO_FIELD["lam"]
_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}

_INT = {"n", "m", "radius", "k", "seed", "trials", "stat_trials", "queried", "validate_queried"}
_FLOAT = {"noise_variance", "energy", "lam", "unit_cost", "nu", "step_size", "validate_p"}
_FLOAT_LIST = {"p", "p_grid"}
_INT_LIST = {"iterations"}
_STR = {"mu2", "mode"}


def validate(cfg):
    def need(cond, key, msg):
        if not cond:
            raise ConfigError(f"{key} {msg}")

    for name in ("n", "m", "radius", "k", "trials", "stat_trials", "validate_queried"):
        need(getattr(cfg, name) >= 1, _FIELD_TO_KEY[name], "must be a positive integer")
    need(cfg.n >= 2, "n", "must be at least 2")
    need(cfg.m <= cfg.n, "m", "must not exceed n")
    need(cfg.k <= cfg.n, "k", "must not exceed n")
    need(cfg.validate_queried <= cfg.n, "validate_queried", "must not exceed n")
    need(cfg.seed >= 0, "seed", "must be non-negative")
    need(cfg.noise_variance >= 0, "noise_variance", "must be non-negative")
    need(cfg.energy > 0, "energy", "must be positive")
    need(cfg.lam >= 0, "lambda", "must be non-negative")
    need(cfg.unit_cost > 0, "unit_cost", "must be positive")
    need(len(cfg.p) > 0, "p", "must not be empty")
    need(all(0 <= x < 1 for x in cfg.p), "p", "must be in [0,1)")
    need(len(cfg.p_grid) > 0, "p_grid", "must not be empty")
    need(all(0 <= x < 1 for x in cfg.p_grid), "p_grid", "must be in [0,1)")
    need(0 <= cfg.validate_p < 1, "validate_p", "must be in [0,1)")
    need(len(cfg.iterations) > 0, "iterations", "must not be empty")
    need(all(i >= 0 for i in cfg.iterations), "iterations", "must be non-negative")
    need(cfg.queried is None or 1 <= cfg.queried <= cfg.n, "queried", "must be in [1, n]")
    need(cfg.nu > 1, "nu", "must be greater than 1")
    need(cfg.mu2 is None or cfg.mu2 in MU2_SOURCES, "mu2", f"must be one of {', '.join(MU2_SOURCES)}")
    need(cfg.mode is None or cfg.mode in MODES, "mode", f"must be one of {', '.join(MODES)}")
    need(cfg.step_size is None or cfg.step_size > 0, "step_size", "must be positive")


def _convert(name, raw):
    if name in _INT:
        return int(raw)
    if name in _FLOAT:
        return float(raw)
    if name in _FLOAT_LIST:
        return tuple(float(x) for x in raw.split(",") if x.strip())
    if name in _INT_LIST:
        return tuple(int(x) for x in raw.split(",") if x.strip())
    return raw


def parse_text(text):
    values, where = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in where:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {where[key]})")
        name = _KEY_TO_FIELD[key]
        try:
            values[name] = _convert(name, raw)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key}: cannot parse {raw!r}") from None
        where[key] = lineno
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        key = str(exc).split(" ", 1)[0]
        if key in where:
            raise ConfigError(f"line {where[key]}: {exc}") from None
        raise


def parse_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read())


def _fmt(value):
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def emit_config(cfg):
    lines = []
    for name, value in asdict(cfg).items():
        if value is None:
            continue
        lines.append(f"{_FIELD_TO_KEY[name]} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


def with_overrides(cfg, **changes):
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})
