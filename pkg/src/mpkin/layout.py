"""Flat state-vector layout and environmental state.

The solver state is one float64 array: the gas block first (ppm, one entry
per gas species in config order), then one block per aerosol phase instance
(kg m-3), slot by slot.  A phase hosted by k slots yields k blocks with the
same internal species order.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from mpkin.config import GAS, MechanismConfig

STATE_MAGIC = b"MPKS"
STATE_VERSION = 1
_HEADER = struct.Struct("<4sIQ")  # 16 bytes


@dataclass(frozen=True)
class EnvironmentalState:
    temperature: float  # K
    pressure: float  # Pa
    relative_humidity: float | None = None  # water activity proxy, 0-1

    def __post_init__(self):
        if not (self.temperature > 0 and math.isfinite(self.temperature)):
            raise ValueError(f"temperature must be > 0 K, got {self.temperature}")
        if not (self.pressure > 0 and math.isfinite(self.pressure)):
            raise ValueError(f"pressure must be > 0 Pa, got {self.pressure}")
        if self.relative_humidity is not None and not (0.0 <= self.relative_humidity <= 1.0):
            raise ValueError("relative_humidity must lie in [0, 1]")


@dataclass(frozen=True)
class PhaseInstance:
    slot: int
    phase: str
    species: tuple[str, ...]
    offsets: np.ndarray = field(compare=False)

    def offset(self, species: str) -> int:
        return int(self.offsets[self.species.index(species)])


@dataclass
class StateLayout:
    gas_species: tuple[str, ...]
    slot_names: tuple[str, ...]
    phase_instances: tuple[PhaseInstance, ...]
    n_total: int

    def __post_init__(self):
        self.gas_index = {name: i for i, name in enumerate(self.gas_species)}
        self._aero_index = {}
        self._labels = [f"gas:{n}" for n in self.gas_species] + [""] * (
            self.n_total - self.n_gas
        )
        self._slot_index = {name: i for i, name in enumerate(self.slot_names)}
        self.slot_offsets: list[list[int]] = [[] for _ in self.slot_names]
        for k, inst in enumerate(self.phase_instances):
            for name, off in zip(inst.species, inst.offsets):
                self._aero_index[(inst.slot, inst.phase, name)] = int(off)
                self._labels[off] = f"{self.slot_names[inst.slot]}:{inst.phase}:{name}"
                self.slot_offsets[inst.slot].append(int(off))

    @property
    def n_gas(self) -> int:
        return len(self.gas_species)

    def instances_of(self, phase: str) -> list[int]:
        return [k for k, inst in enumerate(self.phase_instances) if inst.phase == phase]

    def index_of(self, slot: int | str | None, phase: str | None, species: str) -> int:
        """Offset of a gas species (slot and phase None) or of an aerosol species."""
        if slot is None and phase is None:
            try:
                return self.gas_index[species]
            except KeyError:
                raise KeyError(f"unknown gas species {species!r}") from None
        if slot is None or phase is None:
            raise KeyError("aerosol lookups need both slot and phase")
        if isinstance(slot, str):
            if slot not in self._slot_index:
                raise KeyError(f"unknown slot {slot!r}")
            slot = self._slot_index[slot]
        try:
            return self._aero_index[(slot, phase, species)]
        except KeyError:
            raise KeyError(f"no state entry for ({slot}, {phase!r}, {species!r})") from None

    def label_of(self, offset: int) -> str:
        """Inverse lookup: human-readable ``slot:phase:species`` (or ``gas:name``)."""
        return self._labels[offset]

    def aerosol_offsets(self, species: str) -> np.ndarray:
        """All offsets of one aerosol species across every phase instance."""
        return np.array(
            [off for (s, ph, name), off in self._aero_index.items() if name == species],
            dtype=np.int64,
        )


def _slots(config: MechanismConfig) -> list[tuple[str, tuple[str, ...]]]:
    rep = config.aero_rep
    if rep is None:
        return []
    if rep.scheme == "modal_sectional":
        return [(m.name, m.phases) for m in rep.modes] + [
            (s.name, s.phases) for s in rep.sections
        ]
    width = len(str(max(rep.max_computational_particles - 1, 0)))
    return [
        (f"particle{i:0{width}d}", rep.phases) for i in range(rep.max_computational_particles)
    ]


def build_layout(config: MechanismConfig) -> StateLayout:
    gas = tuple(s.name for s in config.species if s.kind == GAS)
    offset = len(gas)
    slots = _slots(config)
    instances = []
    for slot_id, (_, phases) in enumerate(slots):
        for ph_name in phases:
            ph = config.find_phase(ph_name)
            n = len(ph.species)
            instances.append(
                PhaseInstance(slot_id, ph_name, ph.species,
                              np.arange(offset, offset + n, dtype=np.int64))
            )
            offset += n
    return StateLayout(gas, tuple(name for name, _ in slots), tuple(instances), offset)


def serialize_state(state: np.ndarray, env: EnvironmentalState) -> bytes:
    """Little-endian doubles behind a 16-byte header (magic, version, n_total)."""
    values = np.ascontiguousarray(state, dtype="<f8")
    rh = math.nan if env.relative_humidity is None else env.relative_humidity
    return (
        _HEADER.pack(STATE_MAGIC, STATE_VERSION, values.size)
        + values.tobytes()
        + struct.pack("<3d", env.temperature, env.pressure, rh)
    )


def deserialize_state(buf: bytes) -> tuple[np.ndarray, EnvironmentalState]:
    if len(buf) < _HEADER.size:
        raise ValueError("state buffer shorter than its header")
    magic, version, n = _HEADER.unpack_from(buf)
    if magic != STATE_MAGIC:
        raise ValueError("not a state snapshot (bad magic)")
    if version != STATE_VERSION:
        raise ValueError(f"unsupported state snapshot version {version}")
    expected = _HEADER.size + 8 * n + 24
    if len(buf) != expected:
        raise ValueError(f"state buffer length {len(buf)} does not match n_total={n}")
    values = np.frombuffer(buf, dtype="<f8", count=n, offset=_HEADER.size).astype(np.float64)
    t, p, rh = struct.unpack_from("<3d", buf, _HEADER.size + 8 * n)
    return values, EnvironmentalState(t, p, None if math.isnan(rh) else rh)
