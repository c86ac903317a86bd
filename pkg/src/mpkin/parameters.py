"""Diagnosed parameters: ZSR aerosol water and its chain-rule Jacobian.

Parameters live in a dense ParameterArray ``lam``.  Each ZSR parameter owns
one entry per instance of its aerosol phase.  Processes that read water
register d f / d lam slots; the core composes
J_solver = J_direct + (d f / d lam) (d lam / d y).
"""

from __future__ import annotations

import numpy as np

from mpkin.config import MechanismConfig, ParameterConfig
from mpkin.layout import EnvironmentalState, StateLayout
from mpkin.linalg import JacobianBuilder, SparseJacobian


class ZSRAerosolWater:
    """W = sum_i 1000 M_i / (MW_i m_i(a_w)) per phase instance.

    M_i in kg m-3, MW_i configured in kg mol-1 (the 1000 converts it to
    g mol-1), m_i(a_w) = sum_d Y_d a_w^d in mol kg-1, or its square for
    electrolytes whose fit is of m^(1/2).  W comes out in kg m-3.
    """

    def __init__(self, cfg: ParameterConfig, layout: StateLayout, first_index: int):
        self.config = cfg
        self.label = cfg.label
        inst = layout.instances_of(cfg.phase)
        pis = layout.phase_instances
        self.instances = np.asarray(inst, dtype=np.int64)
        self.electrolyte_offsets = np.array(
            [[pis[k].offset(e.name) for e in cfg.electrolytes] for k in inst], dtype=np.int64
        ).reshape(len(inst), len(cfg.electrolytes))
        self.water_offsets = np.array(
            [pis[k].offset(cfg.target_water_species) for k in inst], dtype=np.int64
        )
        self.indices = np.arange(first_index, first_index + len(inst), dtype=np.int64)
        self.mw_g = np.array([1000.0 * e.molecular_weight for e in cfg.electrolytes])
        self.coef = np.zeros(len(cfg.electrolytes))
        n_el = len(cfg.electrolytes)
        self.p_rows = np.repeat(self.indices, n_el)
        self.p_cols = self.electrolyte_offsets.ravel()
        self._pos_cache: dict = {}

    @property
    def size(self) -> int:
        return self.indices.size

    def molality(self, water_activity: float) -> np.ndarray:
        """m_i(a_w) for every electrolyte (mol kg-1)."""
        out = []
        for e in self.config.electrolytes:
            v = sum(c * water_activity ** d for d, c in enumerate(e.molality_poly))
            out.append(v * v if e.form == "sqrt_molality" else v)
        return np.array(out)

    def update_for_new_environmental_state(self, env: EnvironmentalState) -> None:
        if env.relative_humidity is None:
            raise ValueError("ZSR aerosol water needs relative_humidity in the environment")
        m = self.molality(env.relative_humidity)
        if np.any(~(m > 0)):
            bad = [e.name for e, v in zip(self.config.electrolytes, m) if not v > 0]
            raise ValueError(
                f"molality polynomial is not positive at a_w={env.relative_humidity} for {bad}"
            )
        self.coef = 1000.0 / (self.mw_g * m)

    def register(self, builder: JacobianBuilder) -> None:
        builder.register(self.p_rows, self.p_cols)

    def calculate(self, y: np.ndarray, lam: np.ndarray) -> None:
        lam[self.indices] = y[self.electrolyte_offsets] @ self.coef

    def jacobian_values(self, y: np.ndarray) -> np.ndarray:
        # W is linear in the electrolyte masses
        return np.tile(self.coef, self.size)

    def calculate_param_jacobian(self, y: np.ndarray, pjac: SparseJacobian) -> None:
        key = id(pjac.pattern)
        if key not in self._pos_cache:
            self._pos_cache[key] = pjac.pattern.positions(self.p_rows, self.p_cols)
        pjac.accumulate(self._pos_cache[key], self.jacobian_values(y))


def build_parameters(config: MechanismConfig, layout: StateLayout
                     ) -> tuple[list[ZSRAerosolWater], dict[tuple[str, str], np.ndarray], int]:
    """Instantiate parameters; returns (parameters, water map for processes, n_params)."""
    params = []
    water: dict[tuple[str, str], np.ndarray] = {}
    n = 0
    for cfg in config.parameters:
        p = ZSRAerosolWater(cfg, layout, n)
        key = (cfg.phase, cfg.target_water_species)
        if key in water:
            raise ValueError(f"two parameters diagnose water {key[1]!r} in phase {key[0]!r}")
        water[key] = p.indices
        params.append(p)
        n += p.size
    return params, water, n
