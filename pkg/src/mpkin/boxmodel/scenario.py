"""Box-model scenario files.

A scenario holds everything that is not mechanism: duration, output
interval, environment, gas initial conditions (ppb), emission fluxes
(mol m-3 s-1), photolysis constants (s-1), the initial aerosol modes and
the settings used to turn those modes into bins or particles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from os import PathLike

from mpkin.config import ConfigError


@dataclass(frozen=True)
class Mode:
    name: str
    number: float  # m-3
    gmd: float  # m, count median diameter
    gsd: float
    composition: tuple[tuple[str, float], ...]  # (aerosol species, mass fraction)


@dataclass(frozen=True)
class BinSettings:
    n_bins: int = 8
    d_min: float | None = None  # m; default: smallest GMD / GSD^3
    d_max: float | None = None  # m; default: largest GMD * GSD^3
    open_ends: bool = True  # end bins absorb the distribution tails


@dataclass(frozen=True)
class ParticleSettings:
    n_particles: int = 10_000
    seed: int = 0
    conserve_mode_mass: bool = False


@dataclass(frozen=True)
class Scenario:
    duration: float  # s
    output_interval: float  # s
    temperature: float  # K
    pressure: float  # Pa
    relative_humidity: float | None = None
    initial_ppb: dict[str, float] = field(default_factory=dict)
    emissions: dict[str, float] = field(default_factory=dict)  # species -> mol m-3 s-1
    photolysis: dict[str, float] = field(default_factory=dict)  # process label -> s-1
    aerosol_phase: str = "organic"
    modes: tuple[Mode, ...] = ()
    bins: BinSettings = BinSettings()
    particles: ParticleSettings = ParticleSettings()
    notes: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.duration >= 0 and math.isfinite(self.duration)):
            raise ConfigError("duration must be >= 0 s")
        if not self.output_interval > 0:
            raise ConfigError("output_interval must be > 0 s")
        if not (self.temperature > 0 and self.pressure > 0):
            raise ConfigError("temperature and pressure must be > 0")
        if self.relative_humidity is not None and not 0 <= self.relative_humidity <= 1:
            raise ConfigError("relative_humidity must lie in [0, 1]")
        if any(not v >= 0 for v in self.initial_ppb.values()):
            raise ConfigError("initial mixing ratios must be >= 0")
        for m in self.modes:
            if not (m.number > 0 and m.gmd > 0 and m.gsd >= 1.0):
                raise ConfigError(f"mode {m.name!r}: number and GMD must be > 0, GSD >= 1")
            total = sum(f for _, f in m.composition)
            if abs(total - 1.0) > 1e-9 or any(f < 0 for _, f in m.composition):
                raise ConfigError(f"mode {m.name!r}: mass fractions must be >= 0 and sum to 1")
        for name, value in {**self.emissions, **self.photolysis}.items():
            if not value >= 0:
                raise ConfigError(f"rate for {name!r} must be >= 0")
        if self.bins.n_bins < 1:
            raise ConfigError("n_bins must be >= 1")
        if self.particles.n_particles < 1:
            raise ConfigError("n_particles must be >= 1")


def _float_map(raw, where) -> dict[str, float]:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be an object")
    out = {}
    for k, v in raw.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{where}.{k} must be a number")
        out[k] = float(v)
    return out


def parse_scenario(text: str) -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a JSON object")
    try:
        env = raw.get("environment", {})
        modes = tuple(
            Mode(m["name"], float(m["number"]), float(m["GMD"]), float(m["GSD"]),
                 tuple(sorted(_float_map(m["composition"], f"modes[{i}].composition").items())))
            for i, m in enumerate(raw.get("modes", []))
        )
        b = raw.get("bins", {})
        p = raw.get("particles", {})
        return Scenario(
            duration=float(raw["duration"]),
            output_interval=float(raw["output_interval"]),
            temperature=float(env["temperature"]),
            pressure=float(env["pressure"]),
            relative_humidity=(None if env.get("relative_humidity") is None
                               else float(env["relative_humidity"])),
            initial_ppb=_float_map(raw.get("initial_ppb"), "initial_ppb"),
            emissions=_float_map(raw.get("emissions"), "emissions"),
            photolysis=_float_map(raw.get("photolysis"), "photolysis"),
            aerosol_phase=raw.get("aerosol_phase", "organic"),
            modes=modes,
            bins=BinSettings(int(b.get("n_bins", 8)), b.get("d_min"), b.get("d_max"),
                             bool(b.get("open_ends", True))),
            particles=ParticleSettings(int(p.get("n_particles", 10_000)), int(p.get("seed", 0)),
                                       bool(p.get("conserve_mode_mass", False))),
            notes={k: str(v) for k, v in raw.get("notes", {}).items()},
        )
    except KeyError as exc:
        raise ConfigError(f"scenario is missing key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed scenario: {exc}") from None


def load_scenario(path: str | PathLike) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
