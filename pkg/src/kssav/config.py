"""Line-oriented ``key = value`` run configuration.

Blank lines and text after ``#`` are ignored. Keys are case-sensitive and
unknown keys are rejected. Example::

    dim = 1
    x_min = 0
    x_max = 10
    nx = 100
    dt = 0.001
    T_final = 10
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .model import ModelParams

__all__ = ["ConfigError", "SimConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Malformed config file or a value outside its admissible range."""

    def __init__(self, message: str, *, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class SimConfig:
    dim: int = 1
    x_min: float = 0.0
    x_max: float = 10.0
    y_min: float = 0.0
    y_max: float = 1.0
    nx: int = 100
    ny: int = 1
    dt: float = 0.001
    T_final: float = 10.0
    D_u: float = 1.0
    chi_c: float = 40.0
    alpha: float = 0.5
    delta: float = 1.0
    tau: float = 0.01
    C_shift: float = 1.0
    eps_reg: float = 0.01
    u0_mean: float = 0.5
    perturb_amp: float = 0.01
    rng_seed: int = 0
    # None means the uniform steady state u0_mean * delta / alpha
    c0_value: float | None = None
    snapshot_every: int = 1000
    output_dir: str = "out"
    c_solver: str = "direct"

    def __post_init__(self):
        validate(self)

    @property
    def params(self) -> ModelParams:
        return ModelParams(
            D_u=self.D_u, chi_c=self.chi_c, alpha=self.alpha, delta=self.delta,
            tau=self.tau, C_shift=self.C_shift, eps_reg=self.eps_reg,
        )

    @property
    def n_steps(self) -> int:
        # tolerate T_final / dt landing a rounding error above an integer
        return max(1, math.ceil(self.T_final / self.dt - 1e-9))

    @property
    def c0(self) -> float:
        if self.c0_value is not None:
            return self.c0_value
        if self.alpha > 0:
            return self.u0_mean * self.delta / self.alpha
        return 0.0

    def with_overrides(self, **kw) -> "SimConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


_INT_KEYS = {"dim", "nx", "ny", "rng_seed", "snapshot_every"}
_STR_KEYS = {"output_dir", "c_solver"}
_KEYS = {f.name for f in fields(SimConfig)}


def validate(cfg: SimConfig) -> None:
    def bad(key, msg):
        raise ConfigError(f"{key}: {msg}", key=key)

    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, float) and not math.isfinite(v):
            bad(f.name, f"must be finite, got {v!r}")
    if cfg.dim not in (1, 2):
        bad("dim", f"must be 1 or 2, got {cfg.dim}")
    if not cfg.x_max > cfg.x_min:
        bad("x_max", "must exceed x_min")
    if cfg.dim == 2 and not cfg.y_max > cfg.y_min:
        bad("y_max", "must exceed y_min")
    if cfg.nx < 1:
        bad("nx", f"must be >= 1, got {cfg.nx}")
    if cfg.ny < 1:
        bad("ny", f"must be >= 1, got {cfg.ny}")
    if not cfg.dt > 0:
        bad("dt", f"must be > 0, got {cfg.dt!r}")
    if not cfg.T_final >= cfg.dt:
        bad("T_final", f"must be >= dt, got {cfg.T_final!r}")
    if cfg.perturb_amp < 0:
        bad("perturb_amp", f"must be >= 0, got {cfg.perturb_amp!r}")
    if not 0.0 <= cfg.u0_mean <= 1.0:
        bad("u0_mean", f"must lie in [0, 1], got {cfg.u0_mean!r}")
    if cfg.u0_mean - cfg.perturb_amp < 0.0 or cfg.u0_mean + cfg.perturb_amp > 1.0:
        bad("perturb_amp", "u0_mean +/- perturb_amp leaves [0, 1]")
    if cfg.snapshot_every < 1:
        bad("snapshot_every", f"must be >= 1, got {cfg.snapshot_every}")
    if cfg.rng_seed < 0 or cfg.rng_seed >= 2**64:
        bad("rng_seed", "must be an unsigned 64-bit integer")
    if cfg.c_solver not in ("direct", "cg"):
        bad("c_solver", f"must be 'direct' or 'cg', got {cfg.c_solver!r}")
    if cfg.c0_value is not None and cfg.c0_value < 0:
        bad("c0_value", f"must be >= 0, got {cfg.c0_value!r}")
    try:
        cfg.params
    except ValueError as exc:
        key = str(exc).split(" ", 1)[0]
        raise ConfigError(str(exc), key=key) from None


def _convert(key: str, raw: str, line: int):
    try:
        if key in _STR_KEYS:
            return raw
        if key in _INT_KEYS:
            return int(raw, 0)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}", line=line, key=key) from None


def parse_config(text: str) -> SimConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, raw = (p.strip() for p in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", line=lineno, key=key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", line=lineno, key=key)
        if not raw:
            raise ConfigError(f"{key}: missing value", line=lineno, key=key)
        values[key] = _convert(key, raw, lineno)
    return SimConfig(**values)


def load_config(path) -> SimConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
