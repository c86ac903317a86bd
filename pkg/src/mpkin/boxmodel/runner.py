"""Scenario-driven box model: build a representation, run the time loop, write CSV."""

from __future__ import annotations

import csv
import math
import sys
from dataclasses import dataclass, field, replace
from os import PathLike

import numpy as np

from mpkin.boxmodel.aerosol import (
    default_bin_range,
    discretize_modes_to_bins,
    mode_mass,
    sample_particles,
)
from mpkin.boxmodel.scenario import Scenario
from mpkin.config import (
    AEROSOL,
    AeroRepConfig,
    ConfigError,
    MechanismConfig,
    ModeDef,
    SectionDef,
    mechanism_hash,
)
from mpkin.constants import GAS_CONSTANT
from mpkin.core import Core
from mpkin.layout import EnvironmentalState, serialize_state
from mpkin.solver import SolverError, SolverOptions, SolveStats

REPRESENTATIONS = ("modes", "bins", "particles")


def air_density(env: EnvironmentalState) -> float:
    """n_air = P / (R T) in mol m-3."""
    return env.pressure / (GAS_CONSTANT * env.temperature)


def emission_to_ppm_per_s(rate_mol_m3_s: float, env: EnvironmentalState) -> float:
    return rate_mol_m3_s / air_density(env) * 1e6


def _densities(config: MechanismConfig) -> dict[str, float]:
    return {s.name: s.density for s in config.species if s.kind == AEROSOL and s.density}


def build_representation(config: MechanismConfig, scenario: Scenario, representation: str,
                         seed: int | None = None):
    """Aerosol representation config plus the initial aerosol masses.

    Returns ``(aero_rep, masses, weights)``: ``masses`` maps (slot name,
    species) to kg m-3, ``weights`` is None except for particles.
    """
    if representation not in REPRESENTATIONS:
        raise ConfigError(f"unknown representation {representation!r}; use one of {REPRESENTATIONS}")
    phase = scenario.aerosol_phase
    if not scenario.modes:
        return None, {}, None
    if config.find_phase(phase) is None:
        raise ConfigError(f"scenario aerosol phase {phase!r} is not defined by the mechanism")
    rho = _densities(config)
    missing = {n for m in scenario.modes for n, _ in m.composition} - set(rho)
    if missing:
        raise ConfigError(f"aerosol species without a density in the mechanism: {sorted(missing)}")
    masses: dict[tuple[str, str], float] = {}
    if representation == "modes":
        rep = AeroRepConfig("modal_sectional", modes=tuple(
            ModeDef(m.name, m.gmd, m.gsd, (phase,)) for m in scenario.modes))
        for m in scenario.modes:
            total = mode_mass(m, rho)
            for name, f in m.composition:
                masses[(m.name, name)] = total * f
        return rep, masses, None
    if representation == "bins":
        b = scenario.bins
        lo, hi = default_bin_range(scenario.modes)
        d_min = lo if b.d_min is None else b.d_min
        d_max = hi if b.d_max is None else b.d_max
        binned = discretize_modes_to_bins(scenario.modes, b.n_bins, d_min, d_max, rho,
                                          open_ends=b.open_ends)
        width = len(str(b.n_bins - 1))
        names = [f"bin{i:0{width}d}" for i in range(b.n_bins)]
        rep = AeroRepConfig("modal_sectional", sections=tuple(
            SectionDef(n, float(d), (phase,)) for n, d in zip(names, binned.mid_diameters)))
        for name, values in binned.mass.items():
            for slot, v in zip(names, values):
                masses[(slot, name)] = float(v)
        return rep, masses, None
    p = scenario.particles
    sample = sample_particles(scenario.modes, p.n_particles,
                              p.seed if seed is None else seed, rho, p.conserve_mode_mass)
    rep = AeroRepConfig("single_particle", max_computational_particles=p.n_particles,
                        phases=(phase,))
    width = len(str(max(p.n_particles - 1, 0)))
    for name in sample.mass:
        conc = sample.mass_concentration(name)
        for i in range(p.n_particles):
            masses[(f"particle{i:0{width}d}", name)] = float(conc[i])
    return rep, masses, sample.weights


@dataclass
class RunResult:
    exit_code: int
    last_time: float
    times: list[float] = field(default_factory=list)
    state: np.ndarray | None = None
    stats: SolveStats = field(default_factory=SolveStats)
    message: str = ""


class BoxModel:
    """A Core set up for one scenario and one aerosol representation."""

    def __init__(self, config: MechanismConfig, scenario: Scenario, representation: str,
                 seed: int | None = None, rel_tol: float | None = None):
        self.scenario = scenario
        self.representation = representation
        self.mechanism_hash = mechanism_hash(config)
        rep, masses, weights = build_representation(config, scenario, representation, seed)
        self.config = config.with_aero_rep(rep)
        options = None
        if rel_tol is not None:
            options = SolverOptions(rel_tol=rel_tol)
        self.core = Core(self.config, options)
        if rel_tol is not None:
            self.core.options = replace(self.core.options, rel_tol=rel_tol)
        if weights is not None:
            self.core.set_particle_weights(weights)
        self.env = EnvironmentalState(scenario.temperature, scenario.pressure,
                                      scenario.relative_humidity)
        self.core.set_environment(self.env)
        self.state = self._initial_state(masses)
        self._apply_rates()

    def _initial_state(self, masses) -> np.ndarray:
        layout = self.core.layout
        y = self.core.new_state()
        for name, ppb in self.scenario.initial_ppb.items():
            if name not in layout.gas_index:
                raise ConfigError(f"initial condition for unknown gas species {name!r}")
            y[layout.gas_index[name]] = ppb * 1e-3
        for (slot, name), value in masses.items():
            y[layout.index_of(slot, self.scenario.aerosol_phase, name)] = value
        return y

    def _apply_rates(self) -> None:
        emitters = {}
        for p in self.core.processes:
            if p.process_type == "EMISSION":
                emitters.setdefault(p.config.ref("species"), []).append(p)
        for name, rate in self.scenario.emissions.items():
            procs = emitters.get(name)
            if not procs:
                raise ConfigError(f"no EMISSION process produces {name!r}")
            if len(procs) > 1:
                raise ConfigError(f"several EMISSION processes produce {name!r}")
            procs[0].set_rate(emission_to_ppm_per_s(rate, self.env))
        for label, rate in self.scenario.photolysis.items():
            handle = self.core.get_rate_handle(label)
            if handle.process_type != "PHOTOLYSIS":
                raise ConfigError(f"process {label!r} is not a photolysis reaction")
            handle.set(rate)

    # -- output -------------------------------------------------------------

    def columns(self, per_slot: bool) -> list[str]:
        layout = self.core.layout
        cols = ["time [s]"] + [f"{n} [ppb]" for n in layout.gas_species]
        cols += [f"{n} [kg m-3]" for n in self._aerosol_species()]
        if per_slot:
            cols += [f"{layout.label_of(i)} [kg m-3]" for i in range(layout.n_gas, layout.n_total)]
        return cols

    def _aerosol_species(self) -> list[str]:
        names = {n for inst in self.core.layout.phase_instances for n in inst.species}
        return sorted(names)

    def row(self, t: float, y: np.ndarray, per_slot: bool) -> list[float]:
        layout = self.core.layout
        out = [t] + list(y[: layout.n_gas] * 1e3)
        out += [float(y[layout.aerosol_offsets(n)].sum()) for n in self._aerosol_species()]
        if per_slot:
            out += list(y[layout.n_gas:])
        return out

    def header_comments(self) -> list[str]:
        s = self.scenario
        return [
            f"# mechanism_hash={self.mechanism_hash}",
            f"# representation={self.representation}",
            f"# temperature_K={s.temperature} pressure_Pa={s.pressure}",
            f"# duration_s={s.duration} output_interval_s={s.output_interval}",
        ]

    # -- time loop ----------------------------------------------------------

    def output_times(self) -> list[float]:
        s = self.scenario
        n = int(math.floor(s.duration / s.output_interval + 1e-9))
        times = [k * s.output_interval for k in range(n + 1)]
        if s.duration - times[-1] > 1e-9 * max(s.duration, 1.0):
            times.append(s.duration)
        return times

    def run(self, writer=None, per_slot: bool = True) -> RunResult:
        times = self.output_times()
        y = self.state.copy()
        self.core.write_diagnosed_water(y)
        result = RunResult(0, 0.0, [0.0], y)
        if writer is not None:
            writer.writerow(self.row(0.0, y, per_slot))
        for t0, t1 in zip(times[:-1], times[1:]):
            try:
                y, stats = self.core.solve(y, self.env, t1 - t0)
            except SolverError as exc:
                result.exit_code = 3
                result.message = (f"solver failed between t={t0:g} s and t={t1:g} s: {exc}; "
                                  f"last written time {result.last_time:g} s")
                result.stats.merge(exc.stats)
                break
            result.stats.merge(stats)
            result.last_time = t1
            result.times.append(t1)
            result.state = y
            if writer is not None:
                writer.writerow(self.row(t1, y, per_slot))
        return result


def run_scenario(config: MechanismConfig, scenario: Scenario, representation: str,
                 output: str | PathLike, seed: int | None = None, rel_tol: float | None = None,
                 per_slot: bool | None = None, dump_state: str | PathLike | None = None
                 ) -> RunResult:
    """Run one scenario and write the CSV time series.

    ``per_slot`` defaults to True except for particles, where one column per
    particle species would make the file unwieldy.
    """
    model = BoxModel(config, scenario, representation, seed, rel_tol)
    if per_slot is None:
        per_slot = representation != "particles"
    with open(output, "w", newline="", encoding="utf-8") as fh:
        for line in model.header_comments():
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(model.columns(per_slot))
        result = model.run(writer, per_slot)
    if dump_state is not None and result.state is not None:
        with open(dump_state, "wb") as fh:
            fh.write(serialize_state(result.state, model.env))
    if result.exit_code:
        print(result.message, file=sys.stderr)
    return result
