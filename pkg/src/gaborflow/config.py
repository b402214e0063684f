"""Scenario configuration: JSON-backed dataclasses that validate into the
numeric module types.

Unknown keys are rejected so that typos in config files fail loudly instead
of silently running defaults.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import Box, Ellipsoid, PointSet, separable_lattice
from .quantum import HBAR_GABOR, GridSpec, State, gaussian_window, load_state, norm
from .symplectic import QuadraticHamiltonian

__all__ = [
    "ConfigError",
    "GridConfig",
    "WindowConfig",
    "LatticeConfig",
    "EllipsoidConfig",
    "DeformationConfig",
    "FlowRunConfig",
    "CovarianceConfig",
    "TolerancesConfig",
    "ScenarioConfig",
]


class ConfigError(Exception):
    """Invalid scenario configuration."""


@dataclass
class GridConfig:
    N: int = 128
    L: float = 12.0
    hbar: float = HBAR_GABOR


@dataclass
class WindowConfig:
    # either a Gaussian parameter [re, im] with im > 0, or a state file path
    gamma: list = field(default_factory=lambda: [0.0, 1.0])
    file: str | None = None


@dataclass
class LatticeConfig:
    alpha: float = 2.0 ** -0.5
    beta: float = 2.0 ** -0.5
    box: list = field(default_factory=lambda: [[-6.0, 6.0], [-6.0, 6.0]])


@dataclass
class EllipsoidConfig:
    M: list = field(default_factory=lambda: [[1.0, 0.0], [0.0, 1.0]])
    E: object = 0.5  # a number or a list of numbers (sweep)


@dataclass
class DeformationConfig:
    t_values: list = field(default_factory=lambda: [0.0, 0.2, 0.4, 0.6, 0.8])


@dataclass
class FlowRunConfig:
    z0: list = field(default_factory=lambda: [0.5, 0.0])
    t: float = math.pi / 2.0
    dt_max: float = 1e-3
    eps: float = 0.3


@dataclass
class CovarianceConfig:
    # rows (t, q, p); grids: list of N values to compare (defaults to the scenario grid)
    cases: list = field(
        default_factory=lambda: [
            [0.0, 1.0, 0.0],
            [math.pi / 2.0, 1.0, 0.0],
            [0.7, 0.5, 0.5],
        ]
    )
    grids: list | None = None


@dataclass
class TolerancesConfig:
    boundary_tol: float = 1e-9
    eps_max: float = 1.0


@dataclass
class ScenarioConfig:
    """Top-level experiment description; see ``ScenarioConfig.default``."""

    grid: GridConfig = field(default_factory=GridConfig)
    window: WindowConfig = field(default_factory=WindowConfig)
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    ellipsoid: EllipsoidConfig = field(default_factory=EllipsoidConfig)
    deformation: DeformationConfig = field(default_factory=DeformationConfig)
    flow: FlowRunConfig = field(default_factory=FlowRunConfig)
    covariance: CovarianceConfig = field(default_factory=CovarianceConfig)
    tolerances: TolerancesConfig = field(default_factory=TolerancesConfig)

    @classmethod
    def default(cls) -> "ScenarioConfig":
        return cls()

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"config root must be an object, got {type(data).__name__}")
        cfg = cls()
        sections = {f.name: f.type for f in dataclasses.fields(cls)}
        unknown = set(data) - set(sections)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        for name, payload in data.items():
            section = getattr(cfg, name)
            if not isinstance(payload, dict):
                raise ConfigError(f"section {name!r} must be an object")
            allowed = {f.name for f in dataclasses.fields(section)}
            bad = set(payload) - allowed
            if bad:
                raise ConfigError(f"unknown keys in section {name!r}: {sorted(bad)}")
            for key, value in payload.items():
                setattr(section, key, value)
        return cfg

    @classmethod
    def from_json_file(cls, path) -> "ScenarioConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
        return cls.from_dict(data)

    def apply_overrides(self, overrides: list[str]) -> None:
        """Apply dotted-path overrides like grid.N=512 (values parsed as JSON)."""
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override must look like section.key=value, got {item!r}")
            path, raw = item.split("=", 1)
            parts = path.split(".")
            if len(parts) != 2:
                raise ConfigError(f"override path must be section.key, got {path!r}")
            section_name, key = parts
            if not hasattr(self, section_name):
                raise ConfigError(f"unknown config section {section_name!r}")
            section = getattr(self, section_name)
            if not any(f.name == key for f in dataclasses.fields(section)):
                raise ConfigError(f"unknown key {key!r} in section {section_name!r}")
            try:
                value = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"override value is not valid JSON: {raw!r}") from exc
            setattr(section, key, value)

    # builders: converting to module types is where validation bites
    def build_grid(self, N: int | None = None) -> GridSpec:
        try:
            return GridSpec.centered(
                N=int(N if N is not None else self.grid.N),
                L=float(self.grid.L),
                hbar=float(self.grid.hbar),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid grid: {exc}") from exc

    def build_window(self, g: GridSpec) -> State:
        try:
            if self.window.file is not None:
                psi, gfile = load_state(self.window.file)
                if gfile != g:
                    raise ConfigError("window file grid does not match scenario grid")
                w = norm(psi, g)
                return State(psi.values / w)
            gamma = complex(float(self.window.gamma[0]), float(self.window.gamma[1]))
            return gaussian_window(gamma, g)
        except ConfigError:
            raise
        except (OSError, TypeError, ValueError, IndexError) as exc:
            raise ConfigError(f"invalid window: {exc}") from exc

    def build_lattice(self) -> PointSet:
        try:
            box = Box.from_pairs(self.lattice.box)
            n = box.dim
            return separable_lattice(float(self.lattice.alpha), float(self.lattice.beta), box, n)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid lattice: {exc}") from exc

    def energy_sweep(self) -> list[float]:
        E = self.ellipsoid.E
        values = list(E) if isinstance(E, (list, tuple)) else [E]
        try:
            return [float(v) for v in values]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid ellipsoid energies: {E!r}") from exc

    def build_ellipsoid(self, E: float | None = None) -> Ellipsoid:
        try:
            M = np.asarray(self.ellipsoid.M, dtype=float)
            H = QuadraticHamiltonian(M)
            energy = float(E) if E is not None else self.energy_sweep()[0]
            return Ellipsoid(H, energy)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid ellipsoid: {exc}") from exc

    def t_values(self) -> list[float]:
        try:
            return [float(t) for t in self.deformation.t_values]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid deformation t values: {exc}") from exc
