"""Flat key=value run configuration with strict validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .balance import SolverOptions
from .calculus import SpectralWorkspace
from .errors import ConfigError
from .grid import ObliqueGrid
from .rotation import ModelParams, TiltParams

PRESETS = ("rest", "thermal_bubble", "random_smooth")


@dataclass
class RunConfig:
    latitude_deg: float = 45.0
    epsilon: float = 0.1
    lam: float = 0.5          # config key "lambda"
    alpha: float = 1.0
    nx: int = 32
    ny: int = 32
    nz: int = 16
    lx: float = 1.0
    ly: float = 1.0
    dt: float = 0.01
    t_end: float = 0.1
    output_every: int = 10
    balance_tol: float = 1e-10
    balance_max_iter: int = 50
    relaxation: float = 1.0
    hyperdiff_kappa: float = 0.0
    seed: int = 0
    init: str = "rest"
    init_amplitude: float = 1e-3
    init_width: float = 0.1
    output_dir: str = "out"

    def validate(self) -> "RunConfig":
        """Check every bound before anything is allocated; raises ConfigError."""
        checks = [
            ("epsilon", self.epsilon > 0, "must be > 0"),
            ("alpha", self.alpha > 0, "must be > 0"),
            ("lambda", self.lam + 0.5 > 0, "lambda + 1/2 must be > 0"),
            ("latitude_deg", math.sin(math.radians(self.latitude_deg)) >= 0.1,
             "sin(latitude) must be >= 0.1 (balance loses ellipticity near the equator)"),
            ("nx", self.nx >= 4 and self.nx % 2 == 0, "must be even and >= 4"),
            ("ny", self.ny >= 4 and self.ny % 2 == 0, "must be even and >= 4"),
            ("nz", self.nz >= 2, "must be >= 2"),
            ("lx", self.lx > 0, "must be > 0"),
            ("ly", self.ly > 0, "must be > 0"),
            ("dt", self.dt > 0, "must be > 0"),
            ("t_end", self.t_end >= 0, "must be >= 0"),
            ("output_every", self.output_every >= 1, "must be >= 1"),
            ("balance_tol", self.balance_tol > 0, "must be > 0"),
            ("balance_max_iter", self.balance_max_iter >= 1, "must be >= 1"),
            ("relaxation", 0 < self.relaxation <= 1, "must be in (0, 1]"),
            ("hyperdiff_kappa", self.hyperdiff_kappa >= 0, "must be >= 0"),
            ("init", self.init in PRESETS, f"must be one of {', '.join(PRESETS)}"),
            ("init_amplitude", self.init_amplitude >= 0, "must be >= 0"),
            ("init_width", self.init_width > 0, "must be > 0"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise ConfigError(f"config key '{key}': {msg}")
        return self

    # -- model object factories -------------------------------------------

    def tilt(self) -> TiltParams:
        return TiltParams(math.radians(self.latitude_deg))

    def params(self) -> ModelParams:
        return ModelParams(epsilon=self.epsilon, lam=self.lam, alpha=self.alpha)

    def grid(self) -> ObliqueGrid:
        return ObliqueGrid(self.nx, self.ny, self.nz, self.lx, self.ly, self.tilt())

    def workspace(self) -> SpectralWorkspace:
        return SpectralWorkspace(self.grid())

    def solver_options(self) -> SolverOptions:
        return SolverOptions(tol=self.balance_tol, max_iter=self.balance_max_iter,
                             relaxation=self.relaxation)


_KEY_TO_FIELD = {"lambda": "lam"}
_FIELD_TO_KEY = {"lam": "lambda"}


def parse_config(source) -> RunConfig:
    """Parse flat key = value text (or a path to it) into a validated RunConfig.

    '#' starts a comment; unknown keys are rejected with their line number;
    missing keys take the documented defaults.
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                    and "=" not in source):
        try:
            text = Path(source).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config file {source}: {e}") from e
    else:
        text = str(source)

    field_types = {f.name: f.type for f in fields(RunConfig)}
    cfg = RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        field = _KEY_TO_FIELD.get(key, key)
        if field not in field_types:
            raise ConfigError(f"line {lineno}: unknown config key '{key}'")
        kind = field_types[field]
        try:
            if kind in ("int", int):
                parsed = int(value)
            elif kind in ("float", float):
                parsed = float(value)
            else:
                parsed = value
        except ValueError as e:
            raise ConfigError(f"line {lineno}: key '{key}': {e}") from e
        setattr(cfg, field, parsed)
    return cfg.validate()


def config_text(cfg: RunConfig) -> str:
    """Render a config back to parseable text (used for run provenance)."""
    lines = []
    for f in fields(RunConfig):
        key = _FIELD_TO_KEY.get(f.name, f.name)
        lines.append(f"{key} = {getattr(cfg, f.name)}")
    return "\n".join(lines) + "\n"
