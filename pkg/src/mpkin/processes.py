"""Process types: rate constants, forcing and analytic Jacobian contributions.

Every process exposes the same flat interface.  At construction it fixes

* ``f_idx``: state rows its forcing touches (duplicates allowed),
* ``j_rows, j_cols``: Jacobian slots it will write,
* ``p_rows, p_cols``: slots of d f / d lambda (state row, parameter column),

and afterwards only produces value arrays aligned with those index arrays.
The core concatenates them across processes and scatter-adds once.

Gas species are in ppm, condensed species in kg m-3.  Gas rate constants
are given in molecule cm-3 units and converted to ppm units when the
environment is set.  Condensed-phase rates work in mol m-3 of air or, with
``units: "M"``, in mol per litre of aerosol water.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mpkin import _kernels
from mpkin import rates as R
from mpkin.aero_rep import AerosolRepresentation
from mpkin.config import (
    AEROSOL, GAS, ConfigError, MechanismConfig, ProcessConfig,
)
from mpkin.constants import GAS_CONSTANT
from mpkin.layout import EnvironmentalState, StateLayout
from mpkin.linalg import JacobianBuilder, SparseJacobian

_EMPTY = np.zeros(0, dtype=np.int64)


@dataclass
class ProcessContext:
    """What a process needs to resolve its offsets at construction time."""

    config: MechanismConfig
    layout: StateLayout
    aero_rep: AerosolRepresentation | None = None
    # (phase, water species) -> parameter index per instance of that phase
    water_params: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)

    def instances(self, phase: str) -> np.ndarray:
        if self.aero_rep is None:
            return _EMPTY
        return self.aero_rep.instances(phase)

    def aerosol_offsets(self, inst: np.ndarray, species: str) -> np.ndarray:
        pis = self.layout.phase_instances
        return np.array([pis[k].offset(species) for k in inst], dtype=np.int64)

    def water_source(self, phase: str, water: str, inst: np.ndarray) -> tuple[str, np.ndarray]:
        """('param', parameter indices) when water is diagnosed, else ('state', offsets)."""
        if (phase, water) in self.water_params:
            return "param", self.water_params[(phase, water)]
        return "state", self.aerosol_offsets(inst, water)

    def gas_mw(self, name: str) -> float:
        sp = self.config.find_species(name, GAS)
        if sp is None or not sp.molecular_weight > 0:
            raise ConfigError(f"gas species {name!r} needs a molecular_weight")
        return sp.molecular_weight

    def aerosol_mw(self, name: str) -> float:
        sp = self.config.find_species(name, AEROSOL)
        if sp is None or not sp.molecular_weight > 0:
            raise ConfigError(f"aerosol species {name!r} needs a molecular_weight")
        return sp.molecular_weight


class Process:
    """Base class; subclasses fill the index arrays and the value methods."""

    updatable = False

    def __init__(self, cfg: ProcessConfig, ctx: ProcessContext):
        self.config = cfg
        self.label = cfg.label
        self.process_type = cfg.process_type
        self.f_idx = _EMPTY
        self.j_rows = _EMPTY
        self.j_cols = _EMPTY
        self.p_rows = _EMPTY
        self.p_cols = _EMPTY
        self.env: EnvironmentalState | None = None
        self._pos_cache: dict = {}

    # -- lifecycle ----------------------------------------------------------

    def register_jacobian_elements(self, builder: JacobianBuilder,
                                   param_builder: JacobianBuilder | None = None) -> None:
        builder.register(self.j_rows, self.j_cols)
        if self.p_rows.size:
            if param_builder is None:
                raise ValueError(f"{self.process_type} reads diagnosed parameters; "
                                 "a parameter Jacobian builder is required")
            param_builder.register(self.p_rows, self.p_cols)

    def update_for_new_environmental_state(self, env: EnvironmentalState) -> None:
        self.env = env
        self._update_env(env)

    def _update_env(self, env: EnvironmentalState) -> None:
        raise NotImplementedError

    # -- values -------------------------------------------------------------

    def forcing_values(self, y: np.ndarray, lam: np.ndarray | None) -> np.ndarray:
        raise NotImplementedError

    def jacobian_values(self, y: np.ndarray, lam: np.ndarray | None
                        ) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def production_loss(self, y: np.ndarray, lam: np.ndarray | None
                        ) -> tuple[np.ndarray, np.ndarray]:
        """Split of the forcing into production P and loss frequency L (f = P - L y).

        Aligned with ``f_idx``.  The generic split assigns negative forcing to
        loss; mass-action processes override it with the exact split.
        """
        f = self.forcing_values(y, lam)
        yy = y[self.f_idx]
        loss = np.where((f < 0) & (yy > 0), -f / np.where(yy > 0, yy, 1.0), 0.0)
        prod = np.where(f > 0, f, 0.0) + np.where((f < 0) & ~(yy > 0), f, 0.0)
        return prod, loss

    # -- convenience wrappers over the flat interface -----------------------

    def calculate_derivative_contribution(self, y, forcing: np.ndarray, lam=None) -> None:
        if self.f_idx.size:
            _kernels.scatter_add(forcing, self.f_idx, self.forcing_values(y, lam))

    def calculate_jacobian_contribution(self, y, jac: SparseJacobian, lam=None,
                                        pjac: SparseJacobian | None = None) -> None:
        jv, pv = self.jacobian_values(y, lam)
        key = id(jac.pattern)
        if key not in self._pos_cache:
            self._pos_cache[key] = jac.pattern.positions(self.j_rows, self.j_cols)
        jac.accumulate(self._pos_cache[key], jv)
        if pjac is not None and self.p_rows.size:
            pkey = id(pjac.pattern)
            if pkey not in self._pos_cache:
                self._pos_cache[pkey] = pjac.pattern.positions(self.p_rows, self.p_cols)
            pjac.accumulate(self._pos_cache[pkey], pv)

    def set_rate(self, value: float) -> None:
        raise TypeError(f"{self.process_type} rates cannot be updated at runtime")


# ---------------------------------------------------------------------------
# mass-action family
# ---------------------------------------------------------------------------


@dataclass
class Channel:
    """One rate law k * prod conc^qty feeding weighted output rows.

    The first ``len(rate_idx)`` outputs must be the consumed rate species
    with coefficient -qty (times MW for condensed species).
    """

    rate_idx: list[int]
    qty: list[int]
    scale: list[float]
    out_idx: list[int]
    out_coef: list[float]
    volume: int = -1  # state offset or parameter index of the water volume


class MassActionProcess(Process):
    """Shared machinery for every process that is a sum of mass-action channels."""

    # 'none' | 'state' | 'param': where the per-channel water volume comes from
    volume_kind = "none"

    def _build(self, channels: list[Channel]) -> None:
        n = len(channels)
        m = max((len(c.rate_idx) for c in channels), default=0)
        r = max((len(c.out_idx) for c in channels), default=0)
        self.n_channels = n
        self.rate_idx = np.zeros((n, m), dtype=np.int64)
        self.qty = np.zeros((n, m), dtype=np.int64)
        self.scale = np.ones((n, m))
        self.out_idx = np.zeros((n, r), dtype=np.int64)
        self.out_coef = np.zeros((n, r))
        rate_mask = np.zeros((n, m), dtype=bool)
        out_mask = np.zeros((n, r), dtype=bool)
        for i, c in enumerate(channels):
            k, o = len(c.rate_idx), len(c.out_idx)
            self.rate_idx[i, :k] = c.rate_idx
            self.rate_idx[i, k:] = c.rate_idx[0] if k else 0
            self.qty[i, :k] = c.qty
            self.scale[i, :k] = c.scale
            self.out_idx[i, :o] = c.out_idx
            self.out_idx[i, o:] = c.out_idx[0] if o else 0
            self.out_coef[i, :o] = c.out_coef
            rate_mask[i, :k] = True
            out_mask[i, :o] = True
        self.q_total = self.qty.sum(axis=1)
        self.volume = np.array([c.volume for c in channels], dtype=np.int64)
        self.k = np.zeros(n)
        # reactant outputs carry -qty * unit; this recovers the unit factor
        head = self.out_coef[:, :m]
        with np.errstate(divide="ignore", invalid="ignore"):
            self._loss_unit = np.where(self.qty > 0, -head / np.maximum(self.qty, 1), 0.0)

        self._f_mask = out_mask.ravel()
        self.f_idx = self.out_idx.ravel()[self._f_mask]
        jmask = (out_mask[:, :, None] & rate_mask[:, None, :]).ravel()
        self._j_mask = jmask
        rows = np.broadcast_to(self.out_idx[:, :, None], (n, r, m)).ravel()[jmask]
        cols = np.broadcast_to(self.rate_idx[:, None, :], (n, r, m)).ravel()[jmask]
        vol_rows = self.out_idx.ravel()[self._f_mask]
        vol_cols = np.broadcast_to(self.volume[:, None], (n, r)).ravel()[self._f_mask]
        if self.volume_kind == "state":
            self.j_rows = np.concatenate([rows, vol_rows])
            self.j_cols = np.concatenate([cols, vol_cols])
        else:
            self.j_rows, self.j_cols = rows, cols
        if self.volume_kind == "param":
            self.p_rows, self.p_cols = vol_rows, vol_cols

    def _rates(self, y, lam):
        conc = y[self.rate_idx] * self.scale
        if self.volume_kind == "none":
            rate, drate = _kernels.mass_action(conc, self.qty, self.k)
            return rate, drate * self.scale, None
        vol = (y if self.volume_kind == "state" else lam)[self.volume]
        ok = vol > 0
        safe = np.where(ok, vol, 1.0)
        rate, drate = _kernels.mass_action(conc / safe[:, None], self.qty, self.k)
        # rate per litre of water times litres per m3 of air
        rate_mol = np.where(ok, rate * safe, 0.0)
        drate_dy = np.where(ok[:, None], drate * self.scale, 0.0)
        dvol = np.where(ok, (1.0 - self.q_total) * rate, 0.0)
        return rate_mol, drate_dy, dvol

    def forcing_values(self, y, lam):
        rate, _, _ = self._rates(y, lam)
        return (self.out_coef * rate[:, None]).ravel()[self._f_mask]

    def jacobian_values(self, y, lam):
        _, drate, dvol = self._rates(y, lam)
        jv = (self.out_coef[:, :, None] * drate[:, None, :]).ravel()[self._j_mask]
        if dvol is None:
            return jv, np.zeros(0)
        vv = (self.out_coef * dvol[:, None]).ravel()[self._f_mask]
        if self.volume_kind == "state":
            return np.concatenate([jv, vv]), np.zeros(0)
        return jv, vv

    def production_loss(self, y, lam):
        rate, drate, _ = self._rates(y, lam)
        gain = self.out_coef * rate[:, None]
        m = self.rate_idx.shape[1]
        prod = np.where(gain > 0, gain, 0.0)
        loss = np.zeros_like(gain)
        # d rate / d y_j = qty_j rate / y_j, i.e. the loss frequency per unit
        loss[:, :m] = self._loss_unit * drate
        # outputs beyond the reactant block with negative weight (none in
        # practice) fall back to the generic split
        neg = gain < 0
        neg[:, :m] = False
        yy = y[self.out_idx]
        loss = loss + np.where(neg & (yy > 0), -gain / np.where(yy > 0, yy, 1.0), 0.0)
        return prod.ravel()[self._f_mask], loss.ravel()[self._f_mask]


def _molec_to_ppm_factor(env: EnvironmentalState) -> float:
    """molecules cm-3 per ppm."""
    return R.air_number_density(env.temperature, env.pressure) * 1.0e-6


class GasReaction(MassActionProcess):
    """Gas-phase reaction(s) with constants in molecule cm-3 units."""

    def __init__(self, cfg, ctx):
        super().__init__(cfg, ctx)
        self._ctx = ctx
        gi = ctx.layout.gas_index
        self._reactants = [(gi[n], q) for n, q in cfg.reactants]
        chans = [self._channel(prods, ctx) for prods in self._product_sets(cfg)]
        self._build(chans)

    def _product_sets(self, cfg):
        return [cfg.products]

    def _channel(self, products, ctx) -> Channel:
        gi = ctx.layout.gas_index
        prods = list(products)
        if self.config.mass_yield is not None and prods:
            mw0 = ctx.gas_mw(self.config.mass_yield)
            prods = [(n, y * mw0 / ctx.gas_mw(n)) for n, y in prods]
        return Channel(
            rate_idx=[i for i, _ in self._reactants],
            qty=[q for _, q in self._reactants],
            scale=[1.0] * len(self._reactants),
            out_idx=[i for i, _ in self._reactants] + [gi[n] for n, _ in prods],
            out_coef=[-float(q) for _, q in self._reactants] + [float(y) for _, y in prods],
        )

    def molecular_constants(self, env: EnvironmentalState) -> np.ndarray:
        """Rate constants per channel in molecule cm-3 units."""
        raise NotImplementedError

    def _update_env(self, env):
        k = np.asarray(self.molecular_constants(env), dtype=np.float64)
        c = _molec_to_ppm_factor(env)
        self.k = k * c ** (self.q_total - 1.0)


def _number_density(env):
    return R.air_number_density(env.temperature, env.pressure)


class Arrhenius(GasReaction):
    def molecular_constants(self, env):
        p = self.config.params
        return [R.arrhenius_rate_constant(
            env.temperature, env.pressure, p["A"], p.get("Ea", 0.0), p.get("B", 0.0),
            p.get("D", 300.0), p.get("E", 0.0), p.get("C"),
        )]


class Troe(GasReaction):
    def molecular_constants(self, env):
        p = self.config.params
        return [R.troe_rate_constant(
            env.temperature, _number_density(env), p["k0_A"], p["kinf_A"],
            p.get("k0_B", 0.0), p.get("k0_C", 0.0), p.get("kinf_B", 0.0),
            p.get("kinf_C", 0.0), p.get("Fc", 0.6), p.get("N", 1.0),
        )]


class CustomH2o2(GasReaction):
    def molecular_constants(self, env):
        return [R.custom_h2o2_rate_constant(env.temperature, _number_density(env),
                                            self.config.params)]


class CustomOhHno3(GasReaction):
    def molecular_constants(self, env):
        return [R.custom_oh_hno3_rate_constant(env.temperature, _number_density(env),
                                               self.config.params)]


class WennbergTunneling(GasReaction):
    def molecular_constants(self, env):
        p = self.config.params
        return [R.wennberg_tunneling_rate_constant(env.temperature, p["A"], p.get("B", 0.0),
                                                   p.get("C", 0.0))]


class WennbergNoRo2(GasReaction):
    """Two channels sharing reactants: nitrate formation and alkoxy + NO2."""

    def _product_sets(self, cfg):
        return [cfg.branch("nitrate_products"), cfg.branch("alkoxy_products")]

    def molecular_constants(self, env):
        p = self.config.params
        return list(R.wennberg_no_ro2_rate_constants(
            env.temperature, _number_density(env), p["X"], p["Y"], p["a0"], p["n"]
        ))


class _Updatable(GasReaction):
    updatable = True

    def __init__(self, cfg, ctx):
        super().__init__(cfg, ctx)
        self.rate = float(cfg.params.get("rate", 0.0))

    def set_rate(self, value: float) -> None:
        value = float(value)
        if not (value >= 0.0 and math.isfinite(value)):
            raise ValueError(f"rate for {self.label!r} must be a finite value >= 0, got {value}")
        self.rate = value
        self.k = np.full(self.n_channels, value)

    def _update_env(self, env):
        # the stored value is already in the solver's units
        self.k = np.full(self.n_channels, self.rate)


class Photolysis(_Updatable):
    """First-order photolysis; rate constant (s-1) set by the host."""


class FirstOrderLoss(_Updatable):
    """Loss -k [X] of one gas species; k (s-1) set by the host."""

    def __init__(self, cfg, ctx):
        Process.__init__(self, cfg, ctx)
        i = ctx.layout.gas_index[cfg.ref("species")]
        self._build([Channel([i], [1], [1.0], [i], [-1.0])])
        self.rate = float(cfg.params.get("rate", 0.0))


class Emission(_Updatable):
    """Source of one gas species; rate (ppm s-1) set by the host."""

    def __init__(self, cfg, ctx):
        Process.__init__(self, cfg, ctx)
        i = ctx.layout.gas_index[cfg.ref("species")]
        self._build([Channel([], [], [], [i], [1.0])])
        self.rate = float(cfg.params.get("rate", 0.0))


# ---------------------------------------------------------------------------
# condensed-phase reactions, replicated over phase instances
# ---------------------------------------------------------------------------


class CondensedReaction(MassActionProcess):
    def __init__(self, cfg, ctx):
        super().__init__(cfg, ctx)
        self.units = cfg.units or "mol m-3"
        inst = ctx.instances(cfg.phase)
        self.instances = inst
        volume = np.full(inst.size, -1, dtype=np.int64)
        if self.units == "M":
            kind, volume = ctx.water_source(cfg.phase, cfg.ref("aerosol_water"), inst)
            self.volume_kind = kind
        mw = {n: ctx.aerosol_mw(n) for n, _ in tuple(cfg.reactants) + tuple(cfg.products)}
        chans = []
        for j, k in enumerate(inst):
            pi = ctx.layout.phase_instances[k]
            for spec in self._templates(cfg):
                consumed, produced = spec
                chans.append(Channel(
                    rate_idx=[pi.offset(n) for n, _ in consumed],
                    qty=[int(q) for _, q in consumed],
                    scale=[1.0 / mw[n] for n, _ in consumed],
                    out_idx=[pi.offset(n) for n, _ in consumed] + [pi.offset(n) for n, _ in produced],
                    out_coef=[-q * mw[n] for n, q in consumed] + [y * mw[n] for n, y in produced],
                    volume=int(volume[j]),
                ))
        self.channels_per_instance = len(self._templates(cfg))
        self._build(chans)

    def _templates(self, cfg):
        raise NotImplementedError


class CondensedPhaseArrhenius(CondensedReaction):
    def _templates(self, cfg):
        return [(cfg.reactants, cfg.products)]

    def _update_env(self, env):
        p = self.config.params
        k = R.arrhenius_rate_constant(
            env.temperature, env.pressure, p["A"], p.get("Ea", 0.0), p.get("B", 0.0),
            p.get("D", 300.0), p.get("E", 0.0), p.get("C"),
        )
        self.k = np.full(self.n_channels, k)


class AqueousReversible(CondensedReaction):
    """Reactants <-> products with k_f = K_eq(T) k_r."""

    def _templates(self, cfg):
        reverse = tuple((n, int(round(y))) for n, y in cfg.products)
        return [(cfg.reactants, cfg.products), (reverse, cfg.reactants)]

    def equilibrium_constant(self, env):
        p = self.config.params
        return R.aqueous_equilibrium_constant(env.temperature, p["A"], p.get("C", 0.0))

    def _update_env(self, env):
        k_r = self.config.params["k_reverse"]
        k_f = self.equilibrium_constant(env) * k_r
        self.k = np.tile([k_f, k_r], len(self.instances))


# ---------------------------------------------------------------------------
# gas <-> aerosol transfer
# ---------------------------------------------------------------------------


class PhaseTransfer(Process):
    """Condensation k_c N n_g minus an evaporation closure, per phase instance.

    Net flux F_i = G_i (n_g - E_i) in mol m-3 s-1, with G_i = k_c(r_i) N_i and
    E_i the gas-equivalent concentration in equilibrium with the condensed
    phase.  Gas forcing is -sum F_i / S (S: mol m-3 per ppm), aerosol forcing
    F_i MW.
    """

    def __init__(self, cfg, ctx):
        super().__init__(cfg, ctx)
        rep = ctx.aero_rep
        gas_name = cfg.ref("gas_species")
        gas = ctx.config.find_species(gas_name, GAS)
        self.gas = ctx.layout.gas_index[gas_name]
        self.diff_coeff = gas.gas_diffusion_coeff
        self.alpha = gas.mass_accommodation_alpha
        self.gas_mw = ctx.gas_mw(gas_name)
        aero_name = cfg.ref("aerosol_species")
        self.aero_mw = ctx.aerosol_mw(aero_name)
        inst = ctx.instances(cfg.phase)
        self.instances = inst
        self.aero = ctx.aerosol_offsets(inst, aero_name)
        self.rep = rep
        self.slot_cols = rep.slot_idx[rep.inst_slot[inst]] if inst.size else np.zeros((0, 0), np.int64)
        self._setup_evaporation(cfg, ctx)
        n = inst.size
        cols = np.concatenate(
            [np.full((n, 1), self.gas, dtype=np.int64), self.slot_cols, self.evap_cols], axis=1
        )
        self.k_cols = cols.shape[1]
        self.f_idx = np.concatenate([np.full(n, self.gas, dtype=np.int64), self.aero])
        self.j_rows = np.concatenate([np.full(n * self.k_cols, self.gas, dtype=np.int64),
                                      np.repeat(self.aero, self.k_cols)])
        self.j_cols = np.concatenate([cols.ravel(), cols.ravel()])
        if self.param_cols is not None:
            self.p_rows = np.concatenate([np.full(n, self.gas, dtype=np.int64), self.aero])
            self.p_cols = np.concatenate([self.param_cols, self.param_cols])

    param_cols: np.ndarray | None = None

    def _setup_evaporation(self, cfg, ctx):
        raise NotImplementedError

    def _update_env(self, env):
        t = env.temperature
        self.mfp = R.mean_free_path(self.diff_coeff, t, self.gas_mw)
        self.ppm_to_mol = R.air_molar_density(t, env.pressure) * 1.0e-6
        self.rt = GAS_CONSTANT * t

    def _uptake(self, y):
        r = self.rep.effective_radius(y, self.instances)
        num = self.rep.number_concentration(y, self.instances)
        kc, dkc = _kernels.uptake_coefficient(r.value, self.diff_coeff, self.mfp, self.alpha)
        g = kc * num.value
        dg = (num.value * dkc)[:, None] * r.grad + kc[:, None] * num.grad
        return g, dg

    def _evaporation(self, y, lam):
        """E (n,), dE/d evap_cols (n, k_e), dE/d lambda (n,) or None, active mask."""
        raise NotImplementedError

    def _flux(self, y, lam):
        g, dg = self._uptake(y)
        e, de, de_dlam, ok = self._evaporation(y, lam)
        g = np.where(ok, g, 0.0)
        dg = np.where(ok[:, None], dg, 0.0)
        ng = self.ppm_to_mol * y[self.gas]
        return g, dg, ng, e, de, de_dlam

    def forcing_values(self, y, lam):
        if self.instances.size == 0:
            return np.zeros(0)
        g, _, ng, e, _, _ = self._flux(y, lam)
        flux = g * (ng - e)
        return np.concatenate([-flux / self.ppm_to_mol, flux * self.aero_mw])

    def jacobian_values(self, y, lam):
        if self.instances.size == 0:
            return np.zeros(0), np.zeros(0)
        g, dg, ng, e, de, de_dlam = self._flux(y, lam)
        d_flux = np.concatenate(
            [(g * self.ppm_to_mol)[:, None], dg * (ng - e)[:, None], -g[:, None] * de], axis=1
        )
        jv = np.concatenate([(-d_flux / self.ppm_to_mol).ravel(),
                             (d_flux * self.aero_mw).ravel()])
        if de_dlam is None:
            return jv, np.zeros(0)
        dl = -g * de_dlam
        return jv, np.concatenate([-dl / self.ppm_to_mol, dl * self.aero_mw])

    def flux(self, y, lam=None) -> np.ndarray:
        """Net condensation flux per phase instance, mol m-3 s-1."""
        g, _, ng, e, _, _ = self._flux(y, lam)
        return g * (ng - e)


class HenrysLawPhaseTransfer(PhaseTransfer):
    """Dissolution into aerosol water; H(T) in mol L-1 Pa-1.

    Equilibrium: (m/MW) / W = H p, with W in kg m-3 read as litres of water
    per m3 of air.  Without water (W <= 0) no transfer happens.
    """

    def _setup_evaporation(self, cfg, ctx):
        kind, src = ctx.water_source(cfg.phase, cfg.ref("aerosol_water"), self.instances)
        self.water_kind = kind
        self.water = src
        if kind == "state":
            self.evap_cols = np.stack([self.aero, src], axis=1)
        else:
            self.evap_cols = self.aero[:, None]
            self.param_cols = src

    def _update_env(self, env):
        super()._update_env(env)
        p = self.config.params
        self.henry = R.henrys_law_constant(env.temperature, p["H298"], p.get("C", 0.0))

    def _evaporation(self, y, lam):
        w = (y if self.water_kind == "state" else lam)[self.water]
        ok = w > 0
        safe = np.where(ok, w, 1.0)
        coef = np.where(ok, 1.0 / (self.aero_mw * safe * self.henry * self.rt), 0.0)
        e = coef * y[self.aero]
        de_dw = np.where(ok, -e / safe, 0.0)
        if self.water_kind == "state":
            return e, np.stack([coef, de_dw], axis=1), None, ok
        return e, coef[:, None], de_dw, ok


class SimpolPhaseTransfer(PhaseTransfer):
    """Raoult's-law evaporation x_i p_sat(T) / (R T) with SIMPOL vapour pressure."""

    def _setup_evaporation(self, cfg, ctx):
        phase_cols = self.rep.inst_idx[self.instances] if self.instances.size else np.zeros(
            (0, 0), np.int64)
        self.evap_cols = np.concatenate([self.aero[:, None], phase_cols], axis=1)

    def _update_env(self, env):
        super()._update_env(env)
        p = self.config.params
        self.p_sat = R.simpol_vapor_pressure_pa(env.temperature, p["B1"], p["B2"],
                                                p.get("B3", 0.0), p.get("B4", 0.0))

    def _evaporation(self, y, lam):
        mass = self.rep.phase_mass(y, self.instances)
        mw = self.rep.phase_average_mw(y, self.instances)
        m = mass.value
        has = (m > 0) & np.isfinite(mw.value)
        m_safe = np.where(has, m, 1.0)
        mwbar = np.where(has, mw.value, 0.0)
        mw_grad = np.where(has[:, None], mw.grad, 0.0)
        a_mol = y[self.aero] / self.aero_mw
        c = self.p_sat / self.rt
        x = a_mol * mwbar / m_safe
        dx_da = mwbar / (m_safe * self.aero_mw)
        dx_phase = (a_mol / m_safe)[:, None] * mw_grad - (x / m_safe)[:, None] * mass.grad
        de = c * np.concatenate([dx_da[:, None], dx_phase], axis=1)
        de = np.where(has[:, None], de, 0.0)
        return c * x, de, None, np.ones(m.shape, dtype=bool)


PROCESS_CLASSES: dict[str, type[Process]] = {
    "ARRHENIUS": Arrhenius,
    "TROE": Troe,
    "CUSTOM_H2O2": CustomH2o2,
    "CUSTOM_OH_HNO3": CustomOhHno3,
    "WENNBERG_TUNNELING": WennbergTunneling,
    "WENNBERG_NO_RO2": WennbergNoRo2,
    "PHOTOLYSIS": Photolysis,
    "FIRST_ORDER_LOSS": FirstOrderLoss,
    "EMISSION": Emission,
    "CONDENSED_PHASE_ARRHENIUS": CondensedPhaseArrhenius,
    "AQUEOUS_REVERSIBLE": AqueousReversible,
    "HENRYS_LAW_PHASE_TRANSFER": HenrysLawPhaseTransfer,
    "SIMPOL_PHASE_TRANSFER": SimpolPhaseTransfer,
}

def build_process(cfg: ProcessConfig, ctx: ProcessContext) -> Process:
    return PROCESS_CLASSES[cfg.process_type](cfg, ctx)


def build_processes(ctx: ProcessContext) -> list[Process]:
    return [build_process(p, ctx) for p in ctx.config.processes]
