"""Experiment configuration: plain-text key-value files.

One `key value` (or `key = value`) pair per line, `#` comments, blank
lines ignored.  Unknown keys and malformed lines are hard errors that
name the offending line.  h and h1 (source and image distances) have no
physical default and must be given; everything else falls back to the
defaults below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .domain import AdmissibleBounds, Grid, initial_design
from .dtn import default_n_trunc
from .objective import make_quadrature
from .pipeline import build_setup

__all__ = ["ExperimentConfig", "ConfigError", "parse_config",
           "parse_config_text", "problem_from_config"]


class ConfigError(ValueError):
    """Raised for unknown keys, bad values, or missing required keys."""


@dataclass
class ExperimentConfig:
    """All knobs of one experiment; pure data."""

    h: float = None
    h1: float = None
    omega: float = 1.0
    b: float = math.pi
    nx: int = 64
    ny: int = 48
    alpha_count: int = 20
    n_trunc_extra: int = 20
    rho_r0: float = 1.0
    rho_r1: float = 12.0
    rho_i0: float = 0.0
    rho_i1: float = 0.0
    init_kind: str = "uniform"
    init_params: tuple = (6.0,)
    max_iter: int = 200
    tol_j: float = 1e-6
    tol_kkt: float = 1e-4
    seed: int = 0
    outdir: str = "out"

    def validate(self) -> "ExperimentConfig":
        for key in ("h", "h1"):
            if getattr(self, key) is None:
                raise ConfigError(f"missing required config key: {key}")
            if getattr(self, key) <= 0:
                raise ConfigError(f"config key {key} must be positive")
        if self.omega <= 0 or self.b <= 0:
            raise ConfigError("omega and b must be positive")
        if self.alpha_count < 1:
            raise ConfigError("alpha_count must be at least 1")
        if self.n_trunc_extra < 0:
            raise ConfigError("n_trunc_extra must be nonnegative")
        if self.max_iter < 0:
            raise ConfigError("max_iter must be nonnegative")
        try:
            Grid(self.nx, self.ny, self.b)
            AdmissibleBounds(self.rho_r0, self.rho_r1, self.rho_i0, self.rho_i1)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self


_INT_KEYS = {"nx", "ny", "alpha_count", "n_trunc_extra", "max_iter", "seed"}
_STR_KEYS = {"init_kind", "outdir"}
_TUPLE_KEYS = {"init_params"}
_ALL_KEYS = {f.name for f in fields(ExperimentConfig)}


def _convert(key: str, tokens: list, lineno: int, name: str):
    try:
        if key in _TUPLE_KEYS:
            return tuple(float(t) for t in tokens)
        if len(tokens) != 1:
            raise ValueError("expected a single value")
        if key in _INT_KEYS:
            return int(tokens[0])
        if key in _STR_KEYS:
            return tokens[0]
        return float(tokens[0])
    except ValueError as exc:
        raise ConfigError(f"{name}:{lineno}: bad value for {key}: {exc}") from exc


def parse_config_text(text: str, name: str = "<config>") -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.replace("=", " ", 1).split()
        if len(tokens) < 2:
            raise ConfigError(f"{name}:{lineno}: expected 'key value', got {raw!r}")
        key = tokens[0]
        if key not in _ALL_KEYS:
            raise ConfigError(f"{name}:{lineno}: unknown config key: {key}")
        if key in values:
            raise ConfigError(f"{name}:{lineno}: duplicate config key: {key}")
        values[key] = _convert(key, tokens[1:], lineno, name)
    return ExperimentConfig(**values).validate()


def parse_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config_text(fh.read(), name=str(path))


def problem_from_config(config: ExperimentConfig, setup=None):
    """Initial design and solve setup realizing a config.

    A prebuilt setup is passed through untouched; this lets callers reuse
    DtN blocks and traces across calls with the same physics.
    """
    config.validate()
    grid = Grid(config.nx, config.ny, config.b)
    bounds = AdmissibleBounds(config.rho_r0, config.rho_r1,
                              config.rho_i0, config.rho_i1)
    params = config.init_params
    if config.init_kind == "random" and not params:
        params = (config.seed,)
    design0 = initial_design(grid, bounds, config.init_kind, params)
    if setup is None:
        n_trunc = default_n_trunc(config.omega, grid.nx,
                                  extra=config.n_trunc_extra)
        quadrature = make_quadrature(config.alpha_count, config.omega, n_trunc)
        setup = build_setup(grid, config.omega, config.h, config.h1,
                            quadrature, n_trunc)
    return design0, setup
