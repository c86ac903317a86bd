"""Aerosol representations: physical properties of phase instances with gradients.

Processes never look at how a representation stores its particles; they
ask for effective radius, number concentration, phase mass and mean
molecular weight of phase instances and receive values plus partial
derivatives with respect to state entries.  Queries are batched over all
instances of a phase (``Prop``); the per-instance methods with the ``__unit``
suffixes return a single :class:`PropertyWithGradient`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mpkin.config import AEROSOL, MechanismConfig
from mpkin.layout import StateLayout

MIN_RADIUS = 1.0e-10  # m, floor for empty computational particles


@dataclass
class Prop:
    """Batched property: ``value[i]`` with gradient ``grad[i, :]`` on state ``idx[i, :]``."""

    value: np.ndarray
    idx: np.ndarray
    grad: np.ndarray


@dataclass
class PropertyWithGradient:
    value: float
    dvalue_dy: dict[int, float]

    def dense_gradient(self, n: int) -> np.ndarray:
        g = np.zeros(n)
        for k, v in self.dvalue_dy.items():
            g[k] += v
        return g


def _padded(rows: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    """Pad ragged index lists; padding repeats the first entry and is masked out."""
    width = max((len(r) for r in rows), default=0)
    idx = np.zeros((len(rows), width), dtype=np.int64)
    mask = np.zeros((len(rows), width), dtype=bool)
    for i, r in enumerate(rows):
        idx[i, : len(r)] = r
        idx[i, len(r):] = r[0] if r else 0
        mask[i, : len(r)] = True
    return idx, mask


class AerosolRepresentation:
    """Shared bookkeeping: slots, their species offsets and per-species constants."""

    scheme = ""

    def __init__(self, config: MechanismConfig, layout: StateLayout):
        self.layout = layout
        n = layout.n_total
        self.inv_density = np.zeros(n)
        self.inv_mw = np.zeros(n)
        for inst in layout.phase_instances:
            for name, off in zip(inst.species, inst.offsets):
                sp = config.find_species(name, AEROSOL)
                self.inv_density[off] = 1.0 / sp.density
                self.inv_mw[off] = 1.0 / sp.molecular_weight
        self.slot_idx, self.slot_mask = _padded(layout.slot_offsets)
        self.inst_slot = np.array([inst.slot for inst in layout.phase_instances], dtype=np.int64)
        self.inst_idx, self.inst_mask = _padded(
            [list(inst.offsets) for inst in layout.phase_instances]
        )
        self._by_phase = {}
        for k, inst in enumerate(layout.phase_instances):
            self._by_phase.setdefault(inst.phase, []).append(k)

    @property
    def n_slots(self) -> int:
        return len(self.layout.slot_names)

    def instances(self, phase: str) -> np.ndarray:
        return np.asarray(self._by_phase.get(phase, []), dtype=np.int64)

    # -- batched queries (overridden) ---------------------------------------

    def effective_radius(self, y: np.ndarray, inst: np.ndarray) -> Prop:
        raise NotImplementedError

    def number_concentration(self, y: np.ndarray, inst: np.ndarray) -> Prop:
        raise NotImplementedError

    def _slot_volume(self, y, slots):
        idx = self.slot_idx[slots]
        w = np.where(self.slot_mask[slots], self.inv_density[idx], 0.0)
        return np.sum(y[idx] * w, axis=1), idx, w

    def phase_mass(self, y: np.ndarray, inst: np.ndarray) -> Prop:
        idx = self.inst_idx[inst]
        mask = self.inst_mask[inst]
        value = np.sum(np.where(mask, y[idx], 0.0), axis=1)
        return Prop(value, idx, mask.astype(np.float64))

    def phase_average_mw(self, y: np.ndarray, inst: np.ndarray) -> Prop:
        """Mass-weighted harmonic mean MW; NaN for instances without mass."""
        idx = self.inst_idx[inst]
        mask = self.inst_mask[inst]
        conc = np.where(mask, y[idx], 0.0)
        inv_mw = np.where(mask, self.inv_mw[idx], 0.0)
        mass = conc.sum(axis=1)
        moles = (conc * inv_mw).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            mw = mass / moles
            grad = np.where(mask, (1.0 - mw[:, None] * inv_mw) / moles[:, None], 0.0)
        return Prop(mw, idx, grad)

    # -- per-instance interface ---------------------------------------------

    @staticmethod
    def _single(p: Prop) -> PropertyWithGradient:
        grad: dict[int, float] = {}
        for k, g in zip(p.idx[0].tolist(), p.grad[0].tolist()):
            grad[k] = grad.get(k, 0.0) + g
        return PropertyWithGradient(float(p.value[0]), grad)

    def _check(self, instance: int) -> np.ndarray:
        if not 0 <= instance < len(self.layout.phase_instances):
            raise IndexError(f"phase instance {instance} does not belong to this representation")
        return np.array([instance], dtype=np.int64)

    def effective_radius__m(self, y, instance: int) -> PropertyWithGradient:
        return self._single(self.effective_radius(y, self._check(instance)))

    def number_concentration__n_m3(self, y, instance: int) -> PropertyWithGradient:
        return self._single(self.number_concentration(y, self._check(instance)))

    def aerosol_phase_mass__kg_m3(self, y, instance: int) -> PropertyWithGradient:
        return self._single(self.phase_mass(y, self._check(instance)))

    def aerosol_phase_average_molecular_weight__kg_mol(self, y, instance: int
                                                         ) -> PropertyWithGradient:
        p = self.phase_average_mw(y, self._check(instance))
        if not np.isfinite(p.value[0]):
            raise ZeroDivisionError("average molecular weight of an empty phase is undefined")
        return self._single(p)


class ModalSectionalRep(AerosolRepresentation):
    """Fixed-size modes and sections; number follows from mass."""

    scheme = "modal_sectional"

    def __init__(self, config: MechanismConfig, layout: StateLayout):
        super().__init__(config, layout)
        rep = config.aero_rep
        radius, mean_volume = [], []
        for m in rep.modes:
            s2 = math.log(m.gsd) ** 2
            radius.append(0.5 * m.gmd * math.exp(2.5 * s2))
            mean_volume.append(math.pi / 6.0 * m.gmd ** 3 * math.exp(4.5 * s2))
        for s in rep.sections:
            radius.append(0.5 * s.mid_diameter)
            mean_volume.append(math.pi / 6.0 * s.mid_diameter ** 3)
        self.slot_radius = np.array(radius)
        self.slot_mean_volume = np.array(mean_volume)

    def effective_radius(self, y, inst):
        slots = self.inst_slot[inst]
        idx = self.slot_idx[slots]
        return Prop(self.slot_radius[slots].copy(), idx, np.zeros(idx.shape))

    def number_concentration(self, y, inst):
        slots = self.inst_slot[inst]
        vol, idx, w = self._slot_volume(y, slots)
        vbar = self.slot_mean_volume[slots]
        return Prop(vol / vbar, idx, w / vbar[:, None])


class SingleParticleRep(AerosolRepresentation):
    """Computational particles with statistical weights (real particles m-3)."""

    scheme = "single_particle"

    def __init__(self, config: MechanismConfig, layout: StateLayout,
                 weights: np.ndarray | None = None):
        super().__init__(config, layout)
        self.weights = np.ones(self.n_slots)
        if weights is not None:
            self.set_weights(weights)

    def set_weights(self, weights) -> None:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (self.n_slots,):
            raise ValueError(f"expected {self.n_slots} particle weights, got shape {w.shape}")
        if np.any(~(w > 0)):
            raise ValueError("particle weights must be > 0")
        self.weights = w.copy()

    def effective_radius(self, y, inst):
        slots = self.inst_slot[inst]
        vol, idx, w = self._slot_volume(y, slots)
        wt = self.weights[slots]
        v = vol / wt  # volume of one real particle
        r = np.cbrt(3.0 * v / (4.0 * math.pi))
        floor = r < MIN_RADIUS
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(floor, 0.0, r / (3.0 * v * wt))
        return Prop(np.where(floor, MIN_RADIUS, r), idx, w * scale[:, None])

    def number_concentration(self, y, inst):
        slots = self.inst_slot[inst]
        idx = self.slot_idx[slots]
        return Prop(self.weights[slots].copy(), idx, np.zeros(idx.shape))


def build_aero_rep(config: MechanismConfig, layout: StateLayout) -> AerosolRepresentation | None:
    rep = config.aero_rep
    if rep is None:
        return None
    if rep.scheme == "modal_sectional":
        return ModalSectionalRep(config, layout)
    return SingleParticleRep(config, layout)
