"""Versioned JSON run configuration and the built-in scenarios."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .basis import MAX_DEGREE

SCHEMA_VERSION = 1
SCENARIOS = ("table1-darcy", "table1-swe", "table2-coupled", "showcase", "custom")
# manufactured scenario -> the sub-problem it exercises
MANUFACTURED = {"table1-darcy": "darcy", "table1-swe": "swe", "table2-coupled": "coupled"}


class ConfigError(ValueError):
    """The configuration could not be read or failed validation."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Affine(_Model):
    """c + a_t t + a_1 x¹ + a_2 x²."""

    constant: float = 0.0
    t: float = 0.0
    x1: float = 0.0
    x2: float = 0.0

    def __call__(self, t, x1, x2=0.0):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        return self.constant + self.t * t + self.x1 * x1 + self.x2 * x2


class CustomProblem(_Model):
    """User setup with constant or affine data on a flat-bottomed domain."""

    length: float = Field(100.0, gt=0)
    depth: float = Field(-20.0, description="bottom of the subsurface domain")
    bathymetry: Affine = Affine(constant=0.0)
    surface: float = 5.0
    g: float = Field(10.0, gt=0)
    free_flow_diffusion: tuple[float, float] = (0.0, 0.0)
    conductivity: float = Field(1e-3, gt=0)
    inflow_velocity: Affine = Affine()
    subsurface_head: float = 5.0
    left: Literal["river", "openSea", "land"] = "river"
    right: Literal["river", "openSea", "land"] = "openSea"
    subsurface_sides: Literal["dirichlet", "neumann"] = "neumann"

    @model_validator(mode="after")
    def _check(self):
        b = self.bathymetry
        if b.t or b.x2:
            raise ValueError("bathymetry may depend on x1 only")
        lowest = b.constant + min(0.0, b.x1 * self.length)
        highest = b.constant + max(0.0, b.x1 * self.length)
        if self.depth >= lowest:
            raise ValueError("subsurface depth must lie below the bathymetry everywhere")
        if self.surface <= highest:
            raise ValueError("initial surface must lie above the bathymetry everywhere")
        if min(self.free_flow_diffusion) < 0:
            raise ValueError("free-flow diffusion must be non-negative")
        return self


class MeshConfig(_Model):
    """Grid size for single runs; the convergence study derives it from the level."""

    columns: int = Field(42, ge=1)
    layers: int = Field(8, ge=1)


class TimeGrid(_Model):
    """Free-flow step ``dt``, subsurface step ``dt_sub`` = n_substep·dt; unset entries follow the scenario's laws."""

    t_end: float | None = Field(None, gt=0)
    dt: float | None = Field(None, gt=0)
    dt_sub: float | None = Field(None, gt=0)
    n_substep: int = Field(10, ge=1)


class OutputConfig(_Model):
    directory: str = "out"
    every: int = Field(0, ge=0, description="snapshot cadence in subsurface steps; 0 writes the final state only")
    vtk: bool = True
    csv: bool = True


class RunConfig(_Model):
    schema_version: Literal[1] = SCHEMA_VERSION
    kind: Literal["darcy", "swe", "coupled", "convergence", "showcase"]
    scenario: Literal["table1-darcy", "table1-swe", "table2-coupled", "showcase", "custom"]
    degrees: tuple[int, ...] = Field((1,), min_length=1)
    levels: int = Field(3, ge=0, le=8, description="finest refinement level j")
    mesh: MeshConfig = MeshConfig()
    time: TimeGrid = TimeGrid()
    eta: float = Field(1.0, gt=0)
    custom: CustomProblem | None = None
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def _check(self):
        for p in self.degrees:
            if not 0 <= p <= MAX_DEGREE:
                raise ValueError(f"polynomial degree {p} outside 0..{MAX_DEGREE}")
        if self.kind == "convergence" and self.scenario not in MANUFACTURED:
            raise ValueError(f"convergence needs a manufactured scenario, got {self.scenario!r}")
        if self.kind in ("darcy", "swe", "coupled"):
            if self.scenario in MANUFACTURED and MANUFACTURED[self.scenario] != self.kind:
                raise ValueError(f"scenario {self.scenario!r} does not provide a {self.kind} problem")
            if self.scenario == "showcase":
                raise ValueError("the showcase scenario runs with kind 'showcase'")
            if len(self.degrees) != 1:
                raise ValueError("a single run takes exactly one polynomial degree")
        if self.kind == "showcase" and self.scenario != "showcase":
            raise ValueError("kind 'showcase' needs scenario 'showcase'")
        if (self.scenario == "custom") != (self.custom is not None):
            raise ValueError("the 'custom' block is required for, and only allowed with, scenario 'custom'")
        t = self.time
        if t.dt is not None and t.dt_sub is not None and abs(t.dt_sub - t.n_substep * t.dt) > 1e-12 * t.dt_sub:
            raise ValueError("dt_sub must equal n_substep * dt")
        return self

    @property
    def p(self) -> int:
        return self.degrees[0]

    def with_overrides(self, **changes) -> "RunConfig":
        """Validated copy with top-level fields replaced; ``None`` values are ignored."""
        data = self.model_dump()
        data.update({k: v for k, v in changes.items() if v is not None})
        return RunConfig.model_validate(data)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)


def parse_config(text: str) -> RunConfig:
    try:
        return RunConfig.model_validate_json(text)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def builtin_config(name: str) -> RunConfig:
    """Ready-made configuration for one of the named scenarios."""
    if name == "table1-darcy":
        return RunConfig(kind="convergence", scenario=name, degrees=(0, 1, 2), levels=3)
    if name == "table1-swe":
        return RunConfig(kind="convergence", scenario=name, degrees=(0, 1, 2), levels=3)
    if name == "table2-coupled":
        return RunConfig(kind="convergence", scenario=name, degrees=(1,), levels=3, time=TimeGrid(n_substep=10))
    if name == "showcase":
        return RunConfig(
            kind="showcase", scenario=name, degrees=(1,), mesh=MeshConfig(columns=42, layers=8),
            time=TimeGrid(t_end=30000.0, dt_sub=0.1, dt=0.02, n_substep=5), output=OutputConfig(every=1000),
        )
    raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS[:-1])}")
