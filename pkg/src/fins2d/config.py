"""Flat key=value run configuration with strict parsing.

Unknown keys and out-of-range values are rejected with the offending key
named, so a typo never silently changes an experiment.  The format is plain
text, one assignment per line, '#' comments allowed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields as dc_fields

from .errors import ConfigError

_VALID_VELOCITY = ("taylor-green", "random", "zero")
_VALID_DENSITY = ("uniform", "bump", "patch")
_VALID_SHAPES = ("disk", "ellipse", "smoothed-polygon")
_VALID_INTERP = ("bicubic", "clamped")


@dataclass
class RunConfig:
    n: int = 64
    box_length: float = 2.0 * math.pi
    alpha: float = 0.75
    nu: float = 1.0
    dt: float = 1e-2
    t_end: float = 0.1
    velocity: str = "taylor-green"
    velocity_amplitude: float = 0.5
    velocity_modes: int = 3
    density: str = "uniform"
    density_amplitude: float = 0.01
    patch_shape: str = "disk"
    patch_markers: int = 256
    patch_radius: float = 1.0
    interpolant: str = "bicubic"
    diag_every: int = 1
    snapshot_every: int = 0          # 0: initial and final only
    seed: int = 12345
    out_dir: str = "out"
    max_rho_dev: float = 0.5         # smallness gate on |rho0 - 1|
    gamma: float = 0.5
    besov_p: float = 4.0
    threads: int = 1

    def validate(self):
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ConfigError("n: must be a power of two >= 8")
        if not (self.box_length > 0):
            raise ConfigError("box_length: must be positive")
        if not (0.5 < self.alpha < 1.0):
            raise ConfigError("alpha: must lie in (1/2, 1)")
        if not (self.nu > 0):
            raise ConfigError("nu: must be positive")
        if not (self.dt > 0) or not (self.t_end >= 0):
            raise ConfigError("dt/t_end: need dt > 0 and t_end >= 0")
        if self.velocity not in _VALID_VELOCITY:
            raise ConfigError(f"velocity: unknown value {self.velocity!r}")
        if self.density not in _VALID_DENSITY:
            raise ConfigError(f"density: unknown value {self.density!r}")
        if self.patch_shape not in _VALID_SHAPES:
            raise ConfigError(f"patch_shape: unknown value {self.patch_shape!r}")
        if self.interpolant not in _VALID_INTERP:
            raise ConfigError(f"interpolant: unknown value {self.interpolant!r}")
        if not (0.0 <= self.density_amplitude < 1.0):
            raise ConfigError("density_amplitude: must lie in [0, 1)")
        if self.density_amplitude > self.max_rho_dev:
            raise ConfigError(
                "density_amplitude: exceeds the max_rho_dev smallness gate")
        if self.patch_markers < 64:
            raise ConfigError("patch_markers: need at least 64")
        if self.diag_every < 1 or self.snapshot_every < 0:
            raise ConfigError("diag_every/snapshot_every: bad cadence")
        if not (0.0 < self.gamma <= 1.0):
            raise ConfigError("gamma: must lie in (0, 1]")
        if not (1.0 <= self.besov_p):
            raise ConfigError("besov_p: must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads: must be >= 1")
        return self


def parse_config(text: str) -> RunConfig:
    known = {f.name: f.type for f in dc_fields(RunConfig)}
    defaults = RunConfig()
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        current = getattr(defaults, key)
        try:
            if isinstance(current, bool):
                parsed = val.lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                parsed = int(val)
            elif isinstance(current, float):
                parsed = float(val)
            else:
                parsed = val
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None
        values[key] = parsed
    cfg = RunConfig(**values)
    return cfg.validate()


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
